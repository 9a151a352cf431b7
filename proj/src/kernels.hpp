#pragma once

// Internal kernel entry points. Two lanes with identical semantics: `serial`
// is the plain-loop reference, `par` parallelizes over output rows with
// OpenMP. Per-element accumulation order is fixed (ky, kx, ic), so both lanes
// produce bit-identical results; tests assert that.

#include <cstdint>

#include "tinyplan/graph.hpp"
#include "tinyplan/quant.hpp"

namespace tinyplan::exec::kern {

struct ConvSpec {
    TensorShape in, out;
    int kh, kw, sh, sw, pad_t, pad_l;
};

struct QuantSpec {
    int z_in, z_out;
    Requant rq;
};

namespace serial {
void conv2d_f32(const ConvSpec& s, const float* in, const float* w, const float* bias, float* out);
void dwconv2d_f32(const ConvSpec& s, const float* in, const float* w, const float* bias, float* out);
void fc_f32(std::int64_t in_elems, int out_ch, const float* in, const float* w, const float* bias,
            float* out);
void conv2d_i8(const ConvSpec& s, const QuantSpec& q, const std::int8_t* in, const std::int8_t* w,
               const std::int32_t* bias, std::int8_t* out);
void dwconv2d_i8(const ConvSpec& s, const QuantSpec& q, const std::int8_t* in, const std::int8_t* w,
                 const std::int32_t* bias, std::int8_t* out);
void fc_i8(std::int64_t in_elems, int out_ch, const QuantSpec& q, const std::int8_t* in,
           const std::int8_t* w, const std::int32_t* bias, std::int8_t* out);
}  // namespace serial

namespace par {
void conv2d_f32(const ConvSpec& s, const float* in, const float* w, const float* bias, float* out);
void dwconv2d_f32(const ConvSpec& s, const float* in, const float* w, const float* bias, float* out);
void fc_f32(std::int64_t in_elems, int out_ch, const float* in, const float* w, const float* bias,
            float* out);
void conv2d_i8(const ConvSpec& s, const QuantSpec& q, const std::int8_t* in, const std::int8_t* w,
               const std::int32_t* bias, std::int8_t* out);
void dwconv2d_i8(const ConvSpec& s, const QuantSpec& q, const std::int8_t* in, const std::int8_t* w,
                 const std::int32_t* bias, std::int8_t* out);
void fc_i8(std::int64_t in_elems, int out_ch, const QuantSpec& q, const std::int8_t* in,
           const std::int8_t* w, const std::int32_t* bias, std::int8_t* out);
}  // namespace par

}  // namespace tinyplan::exec::kern
