#include "amdreg/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "amdreg/errors.hpp"
#include "amdreg/format.hpp"

namespace fs = std::filesystem;

namespace amdreg {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

struct KvEntry {
    std::string key;
    std::string value;
    int line = 0;
};

std::string at_line(const std::string& path, int line) {
    return path + ":" + std::to_string(line) + ": ";
}

// `key = value` lines; '#' starts a comment; blank lines skipped.
template <class Error>
std::vector<KvEntry> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open: " + path);
    std::vector<KvEntry> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) throw Error(at_line(path, n) + "expected `key = value`");
        KvEntry e;
        e.key = trim(t.substr(0, eq));
        e.value = trim(t.substr(eq + 1));
        e.line = n;
        if (e.key.empty()) throw Error(at_line(path, n) + "empty key");
        out.push_back(e);
    }
    return out;
}

template <class Error>
double parse_double(const std::string& s, const std::string& ctx) {
    const char* c = s.c_str();
    char* end = nullptr;
    double v = std::strtod(c, &end);
    if (end == c || *end != '\0') throw Error(ctx + "not a number: '" + s + "'");
    return v;
}

template <class Error>
long long parse_int(const std::string& s, const std::string& ctx) {
    const char* c = s.c_str();
    char* end = nullptr;
    long long v = std::strtoll(c, &end, 10);
    if (end == c || *end != '\0') throw Error(ctx + "not an integer: '" + s + "'");
    return v;
}

template <class Error>
bool parse_bool(const std::string& s, const std::string& ctx) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw Error(ctx + "not a boolean (true/false/1/0): '" + s + "'");
}

std::size_t element_size(ElementType t) {
    switch (t) {
        case ElementType::uint8: return 1;
        case ElementType::uint16: return 2;
        case ElementType::float32: return 4;
    }
    return 0;
}

const char* element_name(ElementType t) {
    switch (t) {
        case ElementType::uint8: return "uint8";
        case ElementType::uint16: return "uint16";
        case ElementType::float32: return "float32";
    }
    return "?";
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    in.seekg(0, std::ios::end);
    std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::size_t count = std::size_t(size);
    std::vector<std::uint8_t> bytes(count);
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw io_error("read failed: " + path);
    return bytes;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw io_error("write failed: " + path);
}

std::string raw_path_for(const std::string& header_path, const std::string& data_file) {
    fs::path p(header_path);
    return (p.parent_path() / data_file).string();
}

// Raw numeric values before any rescaling: integers verbatim, float32 as-is.
std::vector<double> decode_raw(const VolumeHeader& h, const std::vector<std::uint8_t>& bytes,
                               const std::string& raw_path) {
    std::size_t n = h.grid().voxel_count();
    if (bytes.size() != n * element_size(h.element_type))
        throw io_error(raw_path + ": raw size " + std::to_string(bytes.size()) + " bytes, header needs " +
                       std::to_string(n * element_size(h.element_type)));
    std::vector<double> out(n);
    switch (h.element_type) {
        case ElementType::uint8:
            for (std::size_t i = 0; i < n; ++i) out[i] = bytes[i];
            break;
        case ElementType::uint16:
            for (std::size_t i = 0; i < n; ++i)
                out[i] = double(bytes[2 * i] | (std::uint32_t(bytes[2 * i + 1]) << 8));
            break;
        case ElementType::float32:
            for (std::size_t i = 0; i < n; ++i) {
                std::uint32_t u = bytes[4 * i] | (std::uint32_t(bytes[4 * i + 1]) << 8) |
                                  (std::uint32_t(bytes[4 * i + 2]) << 16) |
                                  (std::uint32_t(bytes[4 * i + 3]) << 24);
                out[i] = double(std::bit_cast<float>(u));
            }
            break;
    }
    return out;
}

double type_scale(ElementType t) {
    switch (t) {
        case ElementType::uint8: return 255.0;
        case ElementType::uint16: return 65535.0;
        case ElementType::float32: return 1.0;
    }
    return 1.0;
}

std::vector<double> read_scaled(const std::string& header_path, VolumeHeader& h) {
    h = read_volume_header(header_path);
    std::string raw = raw_path_for(header_path, h.data_file);
    std::vector<double> v = decode_raw(h, read_bytes(raw), raw);
    double s = type_scale(h.element_type);
    if (s != 1.0)
        for (double& x : v) x /= s;
    return v;
}

} // namespace

Grid VolumeHeader::grid() const {
    return Grid::make(ndims, dim_size, spacing);
}

VolumeHeader read_volume_header(const std::string& header_path) {
    auto kv = read_kv_file<io_error>(header_path);
    VolumeHeader h;
    bool have_ndims = false, have_dims = false, have_type = false, have_data = false;
    std::vector<std::string> dims_raw, spacing_raw;
    int dims_line = 0, spacing_line = 0;
    for (const KvEntry& e : kv) {
        std::string ctx = at_line(header_path, e.line);
        if (e.key == "NDims") {
            long long v = parse_int<io_error>(e.value, ctx);
            if (v != 2 && v != 3) throw io_error(ctx + "NDims must be 2 or 3");
            h.ndims = int(v);
            have_ndims = true;
        } else if (e.key == "DimSize") {
            dims_raw = split_ws(e.value);
            dims_line = e.line;
            have_dims = true;
        } else if (e.key == "ElementSpacing") {
            spacing_raw = split_ws(e.value);
            spacing_line = e.line;
        } else if (e.key == "ElementType") {
            if (e.value == "uint8") h.element_type = ElementType::uint8;
            else if (e.value == "uint16") h.element_type = ElementType::uint16;
            else if (e.value == "float32") h.element_type = ElementType::float32;
            else throw io_error(ctx + "ElementType must be uint8, uint16 or float32");
            have_type = true;
        } else if (e.key == "ElementDataFile") {
            if (e.value.empty()) throw io_error(ctx + "ElementDataFile is empty");
            h.data_file = e.value;
            have_data = true;
        } else {
            throw io_error(ctx + "unknown key '" + e.key + "'");
        }
    }
    if (!have_ndims) throw io_error(header_path + ": missing NDims");
    if (!have_dims) throw io_error(header_path + ": missing DimSize");
    if (!have_type) throw io_error(header_path + ": missing ElementType");
    if (!have_data) throw io_error(header_path + ": missing ElementDataFile");
    if (int(dims_raw.size()) != h.ndims)
        throw io_error(at_line(header_path, dims_line) + "DimSize needs " + std::to_string(h.ndims) +
                       " entries");
    for (int a = 0; a < h.ndims; ++a) {
        long long v = parse_int<io_error>(dims_raw[a], at_line(header_path, dims_line));
        if (v < 1) throw io_error(at_line(header_path, dims_line) + "DimSize entries must be >= 1");
        h.dim_size[a] = int(v);
    }
    if (!spacing_raw.empty()) {
        if (int(spacing_raw.size()) != h.ndims)
            throw io_error(at_line(header_path, spacing_line) + "ElementSpacing needs " +
                           std::to_string(h.ndims) + " entries");
        for (int a = 0; a < h.ndims; ++a) {
            double v = parse_double<io_error>(spacing_raw[a], at_line(header_path, spacing_line));
            if (!(v > 0.0))
                throw io_error(at_line(header_path, spacing_line) + "ElementSpacing must be positive");
            h.spacing[a] = v;
        }
    }
    if (h.ndims == 2) {
        h.dim_size[2] = 1;
        h.spacing[2] = 1.0;
    }
    return h;
}

FuzzyImage read_volume(const std::string& header_path) {
    VolumeHeader h;
    std::vector<double> v = read_scaled(header_path, h);
    FuzzyImage img;
    img.grid = h.grid();
    img.values = std::move(v);
    return img;
}

void write_volume(const std::string& header_path, const FuzzyImage& img, ElementType type) {
    fs::path hp(header_path);
    std::string raw_name = hp.filename().replace_extension(".raw").string();

    std::string header;
    header += "NDims = " + std::to_string(img.grid.ndim) + "\n";
    header += "DimSize =";
    for (int a = 0; a < img.grid.ndim; ++a) header += " " + std::to_string(img.grid.dims[a]);
    header += "\nElementSpacing =";
    for (int a = 0; a < img.grid.ndim; ++a) header += " " + fmt17(img.grid.spacing[a]);
    header += "\nElementType = " + std::string(element_name(type));
    header += "\nElementDataFile = " + raw_name + "\n";

    std::size_t n = img.values.size();
    std::vector<std::uint8_t> bytes(n * element_size(type));
    auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
    switch (type) {
        case ElementType::uint8:
            for (std::size_t i = 0; i < n; ++i)
                bytes[i] = std::uint8_t(std::lround(clamp01(img.values[i]) * 255.0));
            break;
        case ElementType::uint16:
            for (std::size_t i = 0; i < n; ++i) {
                std::uint16_t v = std::uint16_t(std::lround(clamp01(img.values[i]) * 65535.0));
                bytes[2 * i] = std::uint8_t(v & 0xff);
                bytes[2 * i + 1] = std::uint8_t(v >> 8);
            }
            break;
        case ElementType::float32:
            for (std::size_t i = 0; i < n; ++i) {
                std::uint32_t u = std::bit_cast<std::uint32_t>(float(img.values[i]));
                bytes[4 * i] = std::uint8_t(u & 0xff);
                bytes[4 * i + 1] = std::uint8_t((u >> 8) & 0xff);
                bytes[4 * i + 2] = std::uint8_t((u >> 16) & 0xff);
                bytes[4 * i + 3] = std::uint8_t((u >> 24) & 0xff);
            }
            break;
    }

    std::ofstream out(header_path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + header_path);
    out << header;
    if (!out) throw io_error("write failed: " + header_path);
    out.close();
    write_bytes((hp.parent_path() / raw_name).string(), bytes);
}

BinaryMask read_mask(const std::string& header_path) {
    VolumeHeader h = read_volume_header(header_path);
    std::string raw = raw_path_for(header_path, h.data_file);
    std::vector<double> v = decode_raw(h, read_bytes(raw), raw);
    BinaryMask m = BinaryMask::empty(h.grid());
    for (std::size_t i = 0; i < v.size(); ++i) m.inside[i] = v[i] != 0.0;
    return m;
}

void write_mask(const std::string& header_path, const BinaryMask& mask) {
    FuzzyImage img;
    img.grid = mask.grid;
    img.values.resize(mask.inside.size());
    for (std::size_t i = 0; i < mask.inside.size(); ++i) img.values[i] = mask.inside[i] ? 1.0 : 0.0;
    write_volume(header_path, img, ElementType::uint8);
}

WeightMap read_weights(const std::string& header_path) {
    VolumeHeader h;
    std::vector<double> v = read_scaled(header_path, h);
    for (double x : v)
        if (!(x >= 0.0)) throw io_error(header_path + ": weights must be non-negative");
    WeightMap w;
    w.grid = h.grid();
    w.w = std::move(v);
    return w;
}

void write_weights(const std::string& header_path, const WeightMap& weights) {
    FuzzyImage img;
    img.grid = weights.grid;
    img.values = weights.w;
    write_volume(header_path, img, ElementType::float32);
}

LabelImage read_labels(const std::string& header_path) {
    VolumeHeader h = read_volume_header(header_path);
    if (h.element_type == ElementType::float32)
        throw io_error(header_path + ": label volumes must be uint8 or uint16");
    std::string raw = raw_path_for(header_path, h.data_file);
    std::vector<double> v = decode_raw(h, read_bytes(raw), raw);
    LabelImage out;
    out.grid = h.grid();
    out.labels.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.labels[i] = std::uint16_t(v[i]);
    return out;
}

BinaryMask label_mask(const LabelImage& img, int label) {
    BinaryMask m = BinaryMask::empty(img.grid);
    for (std::size_t i = 0; i < img.labels.size(); ++i) m.inside[i] = img.labels[i] == label;
    return m;
}

void write_transform(const std::string& path, const Transform& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    int n = t.ndim();
    out << "dim = " << n << "\n";
    out << "model = " << (t.model() == TransformModel::rigid ? "rigid" : "affine") << "\n";
    out << "center =";
    for (int a = 0; a < n; ++a) out << " " << fmt17(t.center()[a]);
    out << "\n";
    if (t.model() == TransformModel::rigid) {
        out << "angles =";
        for (int a = 0; a < t.angle_count(); ++a) out << " " << fmt17(t.angles()[a]);
        out << "\n";
    } else {
        out << "matrix =";
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) out << " " << fmt17(t.matrix()[3 * r + c]);
        out << "\n";
    }
    out << "translation =";
    for (int a = 0; a < n; ++a) out << " " << fmt17(t.translation()[a]);
    out << "\n";
    if (!out) throw io_error("write failed: " + path);
}

Transform read_transform(const std::string& path) {
    auto kv = read_kv_file<io_error>(path);
    int dim = 0;
    bool have_model = false;
    TransformModel model = TransformModel::rigid;
    std::vector<std::string> center_raw, angles_raw, matrix_raw, translation_raw;
    int center_line = 0, angles_line = 0, matrix_line = 0, translation_line = 0;
    for (const KvEntry& e : kv) {
        std::string ctx = at_line(path, e.line);
        if (e.key == "dim") {
            long long v = parse_int<io_error>(e.value, ctx);
            if (v != 2 && v != 3) throw io_error(ctx + "dim must be 2 or 3");
            dim = int(v);
        } else if (e.key == "model") {
            if (e.value == "rigid") model = TransformModel::rigid;
            else if (e.value == "affine") model = TransformModel::affine;
            else throw io_error(ctx + "model must be rigid or affine");
            have_model = true;
        } else if (e.key == "center") {
            center_raw = split_ws(e.value);
            center_line = e.line;
        } else if (e.key == "angles") {
            angles_raw = split_ws(e.value);
            angles_line = e.line;
        } else if (e.key == "matrix") {
            matrix_raw = split_ws(e.value);
            matrix_line = e.line;
        } else if (e.key == "translation") {
            translation_raw = split_ws(e.value);
            translation_line = e.line;
        } else {
            throw io_error(ctx + "unknown key '" + e.key + "'");
        }
    }
    if (dim == 0) throw io_error(path + ": missing dim");
    if (!have_model) throw io_error(path + ": missing model");
    if (center_raw.empty()) throw io_error(path + ": missing center");
    if (translation_raw.empty()) throw io_error(path + ": missing translation");
    auto parse_vec = [&](const std::vector<std::string>& raw, int line, const char* what) {
        if (int(raw.size()) != dim)
            throw io_error(at_line(path, line) + std::string(what) + " needs " + std::to_string(dim) +
                           " entries");
        Vec v{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) v[a] = parse_double<io_error>(raw[a], at_line(path, line));
        return v;
    };
    Vec c = parse_vec(center_raw, center_line, "center");
    Vec t = parse_vec(translation_raw, translation_line, "translation");
    if (model == TransformModel::rigid) {
        if (!matrix_raw.empty()) throw io_error(path + ": rigid transform must not give matrix");
        int na = dim == 2 ? 1 : 3;
        if (int(angles_raw.size()) != na)
            throw io_error(at_line(path, angles_line) + "angles needs " + std::to_string(na) +
                           " entries");
        std::array<double, 3> ang{0.0, 0.0, 0.0};
        for (int a = 0; a < na; ++a)
            ang[a] = parse_double<io_error>(angles_raw[a], at_line(path, angles_line));
        return Transform::rigid(dim, ang, t, c);
    }
    if (!angles_raw.empty()) throw io_error(path + ": affine transform must not give angles");
    if (int(matrix_raw.size()) != dim * dim)
        throw io_error(at_line(path, matrix_line) + "matrix needs " + std::to_string(dim * dim) +
                       " entries");
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int r = 0; r < dim; ++r)
        for (int cc = 0; cc < dim; ++cc)
            m[3 * r + cc] = parse_double<io_error>(matrix_raw[r * dim + cc], at_line(path, matrix_line));
    return Transform::affine(dim, m, t, c);
}

LandmarkSet read_landmarks(const std::string& path, int ndim) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open: " + path);
    LandmarkSet out;
    std::string line;
    int n = 0;
    int fields = -1;
    bool parity = false;
    int dim = 0;
    while (std::getline(in, line)) {
        ++n;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        std::vector<std::string> f = split_fields(line, ',');
        std::string ctx = at_line(path, n);
        if (fields < 0) {
            fields = int(f.size());
            if (ndim == 2 || ndim == 3) {
                if (fields != ndim && fields != ndim + 1)
                    throw io_error(ctx + "expected " + std::to_string(ndim) + " coordinates with optional parity");
                dim = ndim;
                parity = fields == ndim + 1;
            } else if (fields == 2) {
                dim = 2;
            } else if (fields == 3) {
                dim = 3;
            } else if (fields == 4) {
                dim = 3;
                parity = true;
            } else {
                throw io_error(ctx + "expected 2-4 comma-separated fields");
            }
        } else if (int(f.size()) != fields) {
            throw io_error(ctx + "inconsistent field count (" + std::to_string(f.size()) + " vs " +
                           std::to_string(fields) + ")");
        }
        Vec p{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) p[a] = parse_double<io_error>(f[a], ctx);
        out.points.push_back(p);
        if (parity) {
            long long v = parse_int<io_error>(f[dim], ctx);
            if (v != 0 && v != 1) throw io_error(ctx + "parity must be 0 or 1");
            out.parity.push_back(int(v));
        }
    }
    if (out.points.empty()) throw io_error(path + ": no landmarks");
    return out;
}

void write_landmarks(const std::string& path, const LandmarkSet& l, int ndim) {
    if (ndim != 2 && ndim != 3) throw io_error("write_landmarks: ndim must be 2 or 3");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    bool labeled = l.labeled();
    for (std::size_t i = 0; i < l.points.size(); ++i) {
        out << fmt17(l.points[i][0]);
        for (int a = 1; a < ndim; ++a) out << "," << fmt17(l.points[i][a]);
        if (labeled) out << "," << l.parity[i];
        out << "\n";
    }
    if (!out) throw io_error("write failed: " + path);
}

RegistrationConfig parse_registration_config(const std::string& path, const RegistrationConfig& base) {
    auto kv = read_kv_file<config_error>(path);
    RegistrationConfig cfg = base;
    bool optimizer_touched = false;
    bool have_factors = false, have_sigmas = false;
    int factors_line = 0, sigmas_line = 0;
    for (const KvEntry& e : kv) {
        std::string ctx = at_line(path, e.line);
        if (e.key == "measure") {
            if (e.value == "alpha-amd") cfg.measure = Measure::alpha_amd;
            else if (e.value == "ssd") cfg.measure = Measure::ssd;
            else if (e.value == "pcc") cfg.measure = Measure::pcc;
            else if (e.value == "mi") cfg.measure = Measure::mi;
            else throw config_error(ctx + "measure must be alpha-amd, ssd, pcc or mi");
        } else if (e.key == "model") {
            if (e.value == "rigid") cfg.model = TransformModel::rigid;
            else if (e.value == "affine") cfg.model = TransformModel::affine;
            else throw config_error(ctx + "model must be rigid or affine");
        } else if (e.key == "alpha_levels") {
            long long v = parse_int<config_error>(e.value, ctx);
            if (v < 1) throw config_error(ctx + "alpha_levels must be >= 1");
            cfg.alpha_levels = int(v);
        } else if (e.key == "d_max") {
            cfg.d_max = parse_double<config_error>(e.value, ctx);
        } else if (e.key == "bidirectional") {
            cfg.bidirectional = parse_bool<config_error>(e.value, ctx);
        } else if (e.key == "normalize") {
            cfg.normalize = parse_bool<config_error>(e.value, ctx);
        } else if (e.key == "normalization_rho") {
            double v = parse_double<config_error>(e.value, ctx);
            if (!(v >= 0.0 && v < 0.5)) throw config_error(ctx + "normalization_rho must be in [0, 0.5)");
            cfg.normalization_rho = v;
        } else if (e.key == "pyramid_factors") {
            cfg.pyramid_factors.clear();
            for (const std::string& s : split_ws(e.value)) {
                long long v = parse_int<config_error>(s, ctx);
                if (v < 1) throw config_error(ctx + "pyramid factors must be >= 1");
                cfg.pyramid_factors.push_back(int(v));
            }
            if (cfg.pyramid_factors.empty()) throw config_error(ctx + "pyramid_factors is empty");
            have_factors = true;
            factors_line = e.line;
        } else if (e.key == "pyramid_sigmas") {
            cfg.pyramid_sigmas.clear();
            for (const std::string& s : split_ws(e.value)) {
                double v = parse_double<config_error>(s, ctx);
                if (v < 0.0) throw config_error(ctx + "pyramid sigmas must be >= 0");
                cfg.pyramid_sigmas.push_back(v);
            }
            if (cfg.pyramid_sigmas.empty()) throw config_error(ctx + "pyramid_sigmas is empty");
            have_sigmas = true;
            sigmas_line = e.line;
        } else if (e.key == "step_length") {
            double v = parse_double<config_error>(e.value, ctx);
            if (!(v > 0.0)) throw config_error(ctx + "step_length must be positive");
            cfg.optimizer.step_length = v;
            optimizer_touched = true;
        } else if (e.key == "relaxation") {
            double v = parse_double<config_error>(e.value, ctx);
            if (!(v > 0.0 && v < 1.0)) throw config_error(ctx + "relaxation must be in (0, 1)");
            cfg.optimizer.relaxation = v;
            optimizer_touched = true;
        } else if (e.key == "max_iterations") {
            long long v = parse_int<config_error>(e.value, ctx);
            if (v < 1) throw config_error(ctx + "max_iterations must be >= 1");
            cfg.optimizer.max_iterations = int(v);
            optimizer_touched = true;
        } else if (e.key == "gradient_magnitude_tolerance") {
            double v = parse_double<config_error>(e.value, ctx);
            if (v < 0.0) throw config_error(ctx + "gradient_magnitude_tolerance must be >= 0");
            cfg.optimizer.gradient_magnitude_tolerance = v;
            optimizer_touched = true;
        } else if (e.key == "min_step_length") {
            double v = parse_double<config_error>(e.value, ctx);
            if (v < 0.0) throw config_error(ctx + "min_step_length must be >= 0");
            cfg.optimizer.min_step_length = v;
            optimizer_touched = true;
        } else if (e.key == "sampling_fraction") {
            double v = parse_double<config_error>(e.value, ctx);
            if (!(v > 0.0 && v <= 1.0)) throw config_error(ctx + "sampling_fraction must be in (0, 1]");
            cfg.sampling_fraction = v;
        } else if (e.key == "interpolation") {
            if (e.value == "linear") cfg.interpolation = InterpMode::linear;
            else if (e.value == "nearest") cfg.interpolation = InterpMode::nearest;
            else throw config_error(ctx + "interpolation must be linear or nearest");
        } else if (e.key == "seed") {
            cfg.seed = std::uint64_t(parse_int<config_error>(e.value, ctx));
        } else if (e.key == "mi_bins") {
            long long v = parse_int<config_error>(e.value, ctx);
            if (v < 2) throw config_error(ctx + "mi_bins must be >= 2");
            cfg.mi_bins = int(v);
        } else {
            throw config_error(ctx + "unknown key '" + e.key + "'");
        }
    }
    if (have_factors != have_sigmas)
        throw config_error(path + ": pyramid_factors and pyramid_sigmas must be given together");
    if (have_factors && cfg.pyramid_factors.size() != cfg.pyramid_sigmas.size())
        throw config_error(at_line(path, std::max(factors_line, sigmas_line)) +
                           "pyramid_factors and pyramid_sigmas differ in length");
    if (optimizer_touched || have_factors) cfg.per_level.clear();
    return cfg;
}

FuzzyImage read_pgm(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_bytes(path);
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#')
            tok.push_back(char(bytes[pos++]));
        if (tok.empty()) throw io_error(path + ": truncated PGM header");
        return tok;
    };
    std::string magic = next_token();
    if (magic != "P2" && magic != "P5") throw io_error(path + ": not a PGM file (P2/P5)");
    auto header_int = [&](const char* what) {
        long long v = parse_int<io_error>(next_token(), path + ": ");
        if (v < 1) throw io_error(path + ": bad " + std::string(what));
        return v;
    };
    long long w = header_int("width");
    long long hgt = header_int("height");
    long long maxval = header_int("maxval");
    if (maxval > 65535) throw io_error(path + ": maxval too large");

    FuzzyImage img;
    img.grid = Grid::make2(int(w), int(hgt));
    img.values.resize(std::size_t(w) * std::size_t(hgt));
    if (magic == "P2") {
        for (double& v : img.values) {
            long long s = parse_int<io_error>(next_token(), path + ": ");
            if (s < 0) throw io_error(path + ": bad sample");
            if (s > maxval) throw io_error(path + ": sample exceeds maxval");
            v = double(s) / double(maxval);
        }
    } else {
        ++pos; // single whitespace after maxval
        std::size_t per = maxval < 256 ? 1 : 2;
        if (bytes.size() - pos != img.values.size() * per)
            throw io_error(path + ": raw size does not match header");
        for (std::size_t i = 0; i < img.values.size(); ++i) {
            // two-byte PGM samples are big-endian
            std::uint32_t v = per == 1 ? bytes[pos + i]
                                       : (std::uint32_t(bytes[pos + 2 * i]) << 8) | bytes[pos + 2 * i + 1];
            img.values[i] = double(v) / double(maxval);
        }
    }
    return img;
}

void write_pgm(const std::string& path, const FuzzyImage& img) {
    if (img.grid.ndim != 2) throw io_error("write_pgm: 2D images only");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "P5\n" << img.grid.dims[0] << " " << img.grid.dims[1] << "\n255\n";
    for (double v : img.values) {
        double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        out.put(char(std::uint8_t(std::lround(c * 255.0))));
    }
    if (!out) throw io_error("write failed: " + path);
}

} // namespace amdreg
