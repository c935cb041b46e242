#pragma once

#include <cstdint>
#include <string>

namespace amdreg {

// Exit codes shared by every command: 0 success, 2 non-overlap failure,
// 1 I/O, config or usage error.
struct RegisterArgs {
    std::string ref;
    std::string flo;
    std::string ref_mask, flo_mask;
    std::string ref_weights, flo_weights;
    std::string init_transform;
    std::string config;
    std::string out_transform;
    std::string out_trace;
    std::string measure; // empty keeps the config value
    std::string model;   // empty keeps the config value
    std::int64_t seed = -1; // < 0 keeps the config value
};
int cmd_register(const RegisterArgs& args);

struct SynthArgs {
    std::string image;
    std::string displacement_class = "small";
    int trials = 50;
    double noise_sigma = 0.1;
    std::uint64_t seed = 1;
    std::string config;
    std::string out_report; // prefix for _trials.csv, _cumulative.csv, _summary.json
    bool bidirectional_eval = false;
};
int cmd_synth(const SynthArgs& args);

struct EvalLandmarksArgs {
    std::string ref_landmarks;
    std::string flo_landmarks;
    std::string transform;
    int dim = 0; // 0 infers from the files
    bool csv = false;
};
int cmd_eval_landmarks(const EvalLandmarksArgs& args);

struct EvalIceArgs {
    std::string forward;  // maps reference space away
    std::string backward; // maps back into reference space
    std::string ref;      // volume header providing the point grid
    int stride = 1;
    bool csv = false;
};
int cmd_eval_ice(const EvalIceArgs& args);

struct EvalJaccardArgs {
    std::string a;
    std::string b;
    int label = 1;
    bool csv = false;
};
int cmd_eval_jaccard(const EvalJaccardArgs& args);

struct PhantomArgs {
    std::string kind = "blobs"; // blobs | ring
    int dim = 2;
    int size = 64;
    std::string out;
    double radius = 0.0; // ring; 0 = 0.3 * min extent
    double width = 0.0;  // ring; 0 = 0.08 * min extent
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
};
int cmd_phantom(const PhantomArgs& args);

struct ConvertArgs {
    std::string in;
    std::string out;
    std::string type = "float32"; // volume output element type
};
int cmd_convert(const ConvertArgs& args);

// Full argument parsing and dispatch; returns the process exit code.
int run_cli(int argc, const char* const* argv);

} // namespace amdreg
