#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "amdreg/evaluation.hpp"
#include "amdreg/image.hpp"
#include "amdreg/registration.hpp"
#include "amdreg/transform.hpp"

namespace amdreg {

enum class ElementType { uint8, uint16, float32 };

// Text header: `Key = Value` lines. Required keys NDims, DimSize,
// ElementType, ElementDataFile; ElementSpacing defaults to 1. The raw file
// is little-endian, x fastest, and its byte length must match the header
// exactly. Unknown keys are hard errors naming file and line.
struct VolumeHeader {
    int ndims = 2;
    std::array<int, 3> dim_size{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    ElementType element_type = ElementType::float32;
    std::string data_file; // relative to the header's directory

    Grid grid() const;
};

VolumeHeader read_volume_header(const std::string& header_path);

// Integer types scale to [0,1] by their type maximum; float32 is read as-is
// (round-trips bit-exactly).
FuzzyImage read_volume(const std::string& header_path);
void write_volume(const std::string& header_path, const FuzzyImage& img,
                  ElementType type = ElementType::float32);

// Nonzero raw value = inside, any element type.
BinaryMask read_mask(const std::string& header_path);
void write_mask(const std::string& header_path, const BinaryMask& mask);

// Weights are plain non-negative values, read without rescaling checks.
WeightMap read_weights(const std::string& header_path);
void write_weights(const std::string& header_path, const WeightMap& weights);

// Integer label volumes (uint8/uint16), values kept verbatim.
struct LabelImage {
    Grid grid;
    std::vector<std::uint16_t> labels;
};
LabelImage read_labels(const std::string& header_path);
BinaryMask label_mask(const LabelImage& img, int label);

// Text format with 17-significant-digit reals:
//   dim = 2
//   model = rigid|affine
//   center = cx cy [cz]
//   angles = a [b g]            (rigid)
//   matrix = row-major dim*dim  (affine)
//   translation = tx ty [tz]
void write_transform(const std::string& path, const Transform& t);
Transform read_transform(const std::string& path);

// One point per line, comma-separated physical coordinates, optional
// trailing 0/1 parity column; every line must have the same field count.
// ndim 0 infers: 2 fields = 2D, 3 = 3D, 4 = 3D with parity.
LandmarkSet read_landmarks(const std::string& path, int ndim = 0);
void write_landmarks(const std::string& path, const LandmarkSet& l, int ndim);

// Line-oriented `key = value` with '#' comments. Unknown keys are hard
// errors. Optimizer keys replace the base config's optimizer and clear any
// per-level schedule.
RegistrationConfig parse_registration_config(const std::string& path,
                                             const RegistrationConfig& base);

// PGM (P2/P5) grayscale import/export, spacing 1; values scale by maxval.
FuzzyImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const FuzzyImage& img);

} // namespace amdreg
