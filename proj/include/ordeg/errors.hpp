#pragma once

#include <stdexcept>
#include <string>

namespace ordeg {

// Base class for every error raised by this library. Each concrete type
// corresponds to one failure mode a caller may want to handle separately.
struct error : std::runtime_error {
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

struct zero_norm_error : error {
  explicit zero_norm_error(const std::string& what = "zero-norm vector") : error(what) {}
};

struct length_mismatch_error : error {
  explicit length_mismatch_error(const std::string& what = "vector lengths differ") : error(what) {}
};

struct antipodal_inputs_error : error {
  explicit antipodal_inputs_error(const std::string& what = "slerp endpoints are antipodal") : error(what) {}
};

struct empty_input_error : error {
  explicit empty_input_error(const std::string& what = "empty input") : error(what) {}
};

struct non_positive_temperature_error : error {
  explicit non_positive_temperature_error(const std::string& what = "temperature must be > 0") : error(what) {}
};

struct constant_input_error : error {
  explicit constant_input_error(const std::string& what = "constant input has no correlation") : error(what) {}
};

struct out_of_range_error : error {
  explicit out_of_range_error(const std::string& what = "value out of range") : error(what) {}
};

struct invalid_gap_error : error {
  explicit invalid_gap_error(const std::string& what = "bin gap must be in (0, 100]") : error(what) {}
};

struct image_too_small_error : error {
  explicit image_too_small_error(const std::string& what = "image too small") : error(what) {}
};

struct invalid_quality_error : error {
  explicit invalid_quality_error(const std::string& what = "jpeg quality must be in [1, 100]") : error(what) {}
};

struct shape_mismatch_error : error {
  explicit shape_mismatch_error(const std::string& what = "tensor shapes do not match") : error(what) {}
};

struct key_mismatch_error : error {
  explicit key_mismatch_error(const std::string& what = "map key sets differ") : error(what) {}
};

struct empty_dataset_error : error {
  explicit empty_dataset_error(const std::string& what = "dataset has no records") : error(what) {}
};

struct empty_corpus_error : error {
  explicit empty_corpus_error(const std::string& what = "no usable clean images") : error(what) {}
};

struct non_finite_loss_error : error {
  explicit non_finite_loss_error(const std::string& what = "loss is not finite") : error(what) {}
};

struct io_failure_error : error {
  explicit io_failure_error(const std::string& what = "io failure") : error(what) {}
};

struct invalid_checkpoint_error : error {
  explicit invalid_checkpoint_error(const std::string& what = "invalid checkpoint") : error(what) {}
};

struct index_out_of_range_error : error {
  explicit index_out_of_range_error(const std::string& what = "index out of range") : error(what) {}
};

struct decode_error : error {
  explicit decode_error(const std::string& what = "malformed image stream") : error(what) {}
};

}  // namespace ordeg
