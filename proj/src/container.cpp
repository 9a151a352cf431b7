#include "tinyplan/container.hpp"

#include <fstream>

#include "json.hpp"
#include "tinyplan/graph.hpp"

namespace tinyplan {

using nlohmann::json;

std::uint64_t NamedTensor::elems() const {
    std::uint64_t n = 1;
    for (int d : shape) n *= std::uint64_t(d);
    return n;
}

static const char* dtype_name(DType d) {
    switch (d) {
        case DType::F32: return "f32";
        case DType::I8: return "i8";
        case DType::I32: return "i32";
    }
    return "?";
}

static DType dtype_from(const std::string& s) {
    if (s == "f32") return DType::F32;
    if (s == "i8") return DType::I8;
    if (s == "i32") return DType::I32;
    throw IoError("unknown dtype '" + s + "'");
}

std::vector<NamedTensor> read_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": file not found");
    std::vector<NamedTensor> out;
    std::string header;
    while (std::getline(f, header)) {
        if (header.empty()) continue;
        json j;
        try {
            j = json::parse(header);
        } catch (const json::exception& e) {
            throw IoError(path + ": bad tensor header: " + e.what());
        }
        NamedTensor t;
        t.id = j.at("tensor_id").get<std::string>();
        t.dtype = dtype_from(j.at("dtype").get<std::string>());
        for (const auto& d : j.at("shape")) t.shape.push_back(d.get<int>());
        std::uint64_t n = t.elems();
        auto read_raw = [&](void* dst, std::size_t bytes) {
            if (!f.read(static_cast<char*>(dst), std::streamsize(bytes)))
                throw IoError(path + ": truncated data for tensor '" + t.id + "'");
        };
        switch (t.dtype) {
            case DType::F32: {
                std::vector<float> v(n);
                read_raw(v.data(), n * 4);
                t.data = std::move(v);
                break;
            }
            case DType::I8: {
                std::vector<std::int8_t> v(n);
                read_raw(v.data(), n);
                t.data = std::move(v);
                break;
            }
            case DType::I32: {
                std::vector<std::int32_t> v(n);
                read_raw(v.data(), n * 4);
                t.data = std::move(v);
                break;
            }
        }
        out.push_back(std::move(t));
    }
    return out;
}

void write_container(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open for writing");
    for (const auto& t : tensors) {
        json j;
        j["tensor_id"] = t.id;
        j["dtype"] = dtype_name(t.dtype);
        j["shape"] = t.shape;
        f << j.dump() << "\n";
        switch (t.dtype) {
            case DType::F32:
                f.write(reinterpret_cast<const char*>(t.f32().data()),
                        std::streamsize(t.f32().size() * 4));
                break;
            case DType::I8:
                f.write(reinterpret_cast<const char*>(t.i8().data()),
                        std::streamsize(t.i8().size()));
                break;
            case DType::I32:
                f.write(reinterpret_cast<const char*>(t.i32().data()),
                        std::streamsize(t.i32().size() * 4));
                break;
        }
    }
}

FloatTensors to_float_map(const std::vector<NamedTensor>& tensors) {
    FloatTensors m;
    for (const auto& t : tensors) {
        if (t.dtype != DType::F32)
            throw IoError("tensor '" + t.id + "' is not f32");
        m[t.id] = t.f32();
    }
    return m;
}

}  // namespace tinyplan
