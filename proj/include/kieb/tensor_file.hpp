#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kieb/complex_types.hpp"
#include "kieb/mask.hpp"
#include "kieb/tensor.hpp"
#include "kieb/weighting.hpp"

namespace kieb {

// Binary tensor container:
//   magic "KIEB" | version u16 LE | dtype u8 | ndim u8 | dims u32 LE each |
//   payload, row-major little-endian (complex interleaved re, im).
// Dtype code 4 marks the checkpoint container variant (see checkpoint.hpp).
enum class Dtype : std::uint8_t {
  real32 = 0,
  real64 = 1,
  complex64 = 2,
  complex128 = 3,
};

constexpr std::uint16_t kTensorFileVersion = 1;
constexpr std::uint8_t kCheckpointCode = 4;

std::size_t dtype_size(Dtype d);
const char* dtype_name(Dtype d);

struct TensorBlob {
  Dtype dtype = Dtype::real64;
  std::vector<std::uint32_t> dims;
  std::vector<std::byte> payload;

  std::size_t element_count() const;
};

std::vector<std::byte> encode_tensor(const TensorBlob& blob);
TensorBlob decode_tensor(const std::byte* data, std::size_t size);

void write_tensor_file(const std::filesystem::path& path, const TensorBlob& blob);
TensorBlob read_tensor_file(const std::filesystem::path& path);

// Whole-file helpers with atomic replacement (temp file + rename).
void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<std::byte>& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::byte> read_file(const std::filesystem::path& path);

// Typed conversions.
TensorBlob to_blob(const RealImage& img);
TensorBlob to_blob(const ComplexImage& img);
TensorBlob to_blob(const CoilStack& stack);
TensorBlob to_blob(const SamplingMask& mask);   // real32 0/1 pattern
TensorBlob to_blob(const WeightMatrix& w);
TensorBlob to_blob(const Tensor4<float>& t);
TensorBlob to_blob(const Tensor4<double>& t);

RealImage image_from_blob(const TensorBlob& blob);
ComplexImage complex_image_from_blob(const TensorBlob& blob);
CoilStack coil_stack_from_blob(const TensorBlob& blob);
SamplingMask mask_pattern_from_blob(const TensorBlob& blob);
Tensor4<float> tensor4f_from_blob(const TensorBlob& blob);
Tensor4<double> tensor4d_from_blob(const TensorBlob& blob);

}  // namespace kieb
