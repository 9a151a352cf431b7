#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace tinyplan {

// Binary tensor container: per tensor, one UTF-8 JSON header line
// {"tensor_id":..., "dtype":"f32"|"i8"|"i32", "shape":[...]} terminated by
// '\n', followed by raw little-endian row-major data. Records repeat until
// end of file. Weights, biases and calibration inputs all use this format.

enum class DType { F32, I8, I32 };

struct NamedTensor {
    std::string id;
    DType dtype = DType::F32;
    std::vector<int> shape;
    std::variant<std::vector<float>, std::vector<std::int8_t>, std::vector<std::int32_t>> data;

    std::uint64_t elems() const;
    const std::vector<float>& f32() const { return std::get<std::vector<float>>(data); }
    const std::vector<std::int8_t>& i8() const { return std::get<std::vector<std::int8_t>>(data); }
    const std::vector<std::int32_t>& i32() const { return std::get<std::vector<std::int32_t>>(data); }
};

std::vector<NamedTensor> read_container(const std::string& path);
void write_container(const std::string& path, const std::vector<NamedTensor>& tensors);

// Convenience: f32 tensors keyed by id (weights "<layer>.w" / biases "<layer>.b").
using FloatTensors = std::map<std::string, std::vector<float>>;
FloatTensors to_float_map(const std::vector<NamedTensor>& tensors);

}  // namespace tinyplan
