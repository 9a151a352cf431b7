#include <algorithm>

#include "kernels.hpp"

namespace tinyplan::exec::kern::serial {

// Weight layouts: conv OHWI (oc, ky, kx, ic); dwconv HWC (ky, kx, c); fc (oc, i).

void conv2d_f32(const ConvSpec& s, const float* in, const float* w, const float* bias,
                float* out) {
    const int IC = s.in.c, OC = s.out.c;
    for (int oy = 0; oy < s.out.h; ++oy) {
        for (int ox = 0; ox < s.out.w; ++ox) {
            for (int oc = 0; oc < OC; ++oc) {
                double acc = bias ? bias[oc] : 0.0;
                for (int ky = 0; ky < s.kh; ++ky) {
                    const int iy = oy * s.sh - s.pad_t + ky;
                    if (iy < 0 || iy >= s.in.h) continue;
                    for (int kx = 0; kx < s.kw; ++kx) {
                        const int ix = ox * s.sw - s.pad_l + kx;
                        if (ix < 0 || ix >= s.in.w) continue;
                        const float* ip = in + (std::int64_t(iy) * s.in.w + ix) * IC;
                        const float* wp = w + ((std::int64_t(oc) * s.kh + ky) * s.kw + kx) * IC;
                        for (int ic = 0; ic < IC; ++ic) acc += double(ip[ic]) * wp[ic];
                    }
                }
                out[(std::int64_t(oy) * s.out.w + ox) * OC + oc] = float(acc);
            }
        }
    }
}

void dwconv2d_f32(const ConvSpec& s, const float* in, const float* w, const float* bias,
                  float* out) {
    const int C = s.in.c;
    for (int oy = 0; oy < s.out.h; ++oy) {
        for (int ox = 0; ox < s.out.w; ++ox) {
            for (int c = 0; c < C; ++c) {
                double acc = bias ? bias[c] : 0.0;
                for (int ky = 0; ky < s.kh; ++ky) {
                    const int iy = oy * s.sh - s.pad_t + ky;
                    if (iy < 0 || iy >= s.in.h) continue;
                    for (int kx = 0; kx < s.kw; ++kx) {
                        const int ix = ox * s.sw - s.pad_l + kx;
                        if (ix < 0 || ix >= s.in.w) continue;
                        acc += double(in[(std::int64_t(iy) * s.in.w + ix) * C + c]) *
                               w[(std::int64_t(ky) * s.kw + kx) * C + c];
                    }
                }
                out[(std::int64_t(oy) * s.out.w + ox) * C + c] = float(acc);
            }
        }
    }
}

void fc_f32(std::int64_t in_elems, int out_ch, const float* in, const float* w, const float* bias,
            float* out) {
    for (int oc = 0; oc < out_ch; ++oc) {
        double acc = bias ? bias[oc] : 0.0;
        const float* wp = w + std::int64_t(oc) * in_elems;
        for (std::int64_t i = 0; i < in_elems; ++i) acc += double(in[i]) * wp[i];
        out[oc] = float(acc);
    }
}

static inline std::int8_t requant_clamp(std::int32_t acc, const QuantSpec& q) {
    std::int64_t v = q.z_out + apply_requant(acc, q.rq);
    return std::int8_t(std::clamp<std::int64_t>(v, -128, 127));
}

void conv2d_i8(const ConvSpec& s, const QuantSpec& q, const std::int8_t* in, const std::int8_t* w,
               const std::int32_t* bias, std::int8_t* out) {
    const int IC = s.in.c, OC = s.out.c;
    for (int oy = 0; oy < s.out.h; ++oy) {
        for (int ox = 0; ox < s.out.w; ++ox) {
            for (int oc = 0; oc < OC; ++oc) {
                std::int32_t acc = bias ? bias[oc] : 0;
                for (int ky = 0; ky < s.kh; ++ky) {
                    const int iy = oy * s.sh - s.pad_t + ky;
                    if (iy < 0 || iy >= s.in.h) continue;
                    for (int kx = 0; kx < s.kw; ++kx) {
                        const int ix = ox * s.sw - s.pad_l + kx;
                        if (ix < 0 || ix >= s.in.w) continue;
                        const std::int8_t* ip = in + (std::int64_t(iy) * s.in.w + ix) * IC;
                        const std::int8_t* wp = w + ((std::int64_t(oc) * s.kh + ky) * s.kw + kx) * IC;
                        for (int ic = 0; ic < IC; ++ic)
                            acc += (std::int32_t(ip[ic]) - q.z_in) * std::int32_t(wp[ic]);
                    }
                }
                out[(std::int64_t(oy) * s.out.w + ox) * OC + oc] = requant_clamp(acc, q);
            }
        }
    }
}

void dwconv2d_i8(const ConvSpec& s, const QuantSpec& q, const std::int8_t* in, const std::int8_t* w,
                 const std::int32_t* bias, std::int8_t* out) {
    const int C = s.in.c;
    for (int oy = 0; oy < s.out.h; ++oy) {
        for (int ox = 0; ox < s.out.w; ++ox) {
            for (int c = 0; c < C; ++c) {
                std::int32_t acc = bias ? bias[c] : 0;
                for (int ky = 0; ky < s.kh; ++ky) {
                    const int iy = oy * s.sh - s.pad_t + ky;
                    if (iy < 0 || iy >= s.in.h) continue;
                    for (int kx = 0; kx < s.kw; ++kx) {
                        const int ix = ox * s.sw - s.pad_l + kx;
                        if (ix < 0 || ix >= s.in.w) continue;
                        acc += (std::int32_t(in[(std::int64_t(iy) * s.in.w + ix) * C + c]) - q.z_in) *
                               std::int32_t(w[(std::int64_t(ky) * s.kw + kx) * C + c]);
                    }
                }
                out[(std::int64_t(oy) * s.out.w + ox) * C + c] = requant_clamp(acc, q);
            }
        }
    }
}

void fc_i8(std::int64_t in_elems, int out_ch, const QuantSpec& q, const std::int8_t* in,
           const std::int8_t* w, const std::int32_t* bias, std::int8_t* out) {
    for (int oc = 0; oc < out_ch; ++oc) {
        std::int32_t acc = bias ? bias[oc] : 0;
        const std::int8_t* wp = w + std::int64_t(oc) * in_elems;
        for (std::int64_t i = 0; i < in_elems; ++i)
            acc += (std::int32_t(in[i]) - q.z_in) * std::int32_t(wp[i]);
        out[oc] = requant_clamp(acc, q);
    }
}

}  // namespace tinyplan::exec::kern::serial
