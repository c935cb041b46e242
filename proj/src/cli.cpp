#include "amdreg/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "amdreg/errors.hpp"
#include "amdreg/evaluation.hpp"
#include "amdreg/format.hpp"
#include "amdreg/io.hpp"
#include "amdreg/registration.hpp"
#include "amdreg/threading.hpp"

namespace amdreg {

namespace {

Measure parse_measure(const std::string& s) {
    if (s == "alpha-amd") return Measure::alpha_amd;
    if (s == "ssd") return Measure::ssd;
    if (s == "pcc") return Measure::pcc;
    if (s == "mi") return Measure::mi;
    throw config_error("measure must be alpha-amd, ssd, pcc or mi (got '" + s + "')");
}

TransformModel parse_model(const std::string& s) {
    if (s == "rigid") return TransformModel::rigid;
    if (s == "affine") return TransformModel::affine;
    throw config_error("model must be rigid or affine (got '" + s + "')");
}

DisplacementClass parse_class(const std::string& s) {
    if (s == "small") return DisplacementClass::small;
    if (s == "medium") return DisplacementClass::medium;
    if (s == "large") return DisplacementClass::large;
    throw config_error("class must be small, medium or large (got '" + s + "')");
}

ElementType parse_element_type(const std::string& s) {
    if (s == "uint8") return ElementType::uint8;
    if (s == "uint16") return ElementType::uint16;
    if (s == "float32") return ElementType::float32;
    throw config_error("type must be uint8, uint16 or float32 (got '" + s + "')");
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_level_trace_csv(const std::string& path, const RegistrationResult& res) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "level,iteration,distance,grad_norm,step\n";
    for (const LevelTrace& lt : res.traces)
        for (const IterationRecord& r : lt.trace.entries)
            out << lt.level << ',' << r.iteration << ',' << fmt17(r.distance) << ','
                << fmt17(r.grad_norm) << ',' << fmt17(r.step) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

} // namespace

int cmd_register(const RegisterArgs& args) {
    FuzzyImage ref = read_volume(args.ref);
    FuzzyImage flo = read_volume(args.flo);
    std::optional<BinaryMask> ref_mask, flo_mask;
    std::optional<WeightMap> ref_weights, flo_weights;
    if (!args.ref_mask.empty()) ref_mask = read_mask(args.ref_mask);
    if (!args.flo_mask.empty()) flo_mask = read_mask(args.flo_mask);
    if (!args.ref_weights.empty()) ref_weights = read_weights(args.ref_weights);
    if (!args.flo_weights.empty()) flo_weights = read_weights(args.flo_weights);

    RegistrationConfig cfg;
    if (!args.config.empty()) cfg = parse_registration_config(args.config, cfg);
    if (!args.measure.empty()) cfg.measure = parse_measure(args.measure);
    if (!args.model.empty()) cfg.model = parse_model(args.model);
    if (args.seed >= 0) cfg.seed = std::uint64_t(args.seed);

    Transform t0;
    if (!args.init_transform.empty()) {
        t0 = read_transform(args.init_transform);
        if (args.model.empty()) cfg.model = t0.model();
    } else {
        t0 = Transform::identity(ref.grid.ndim, cfg.model, ref.grid.center());
    }

    RegistrationResult res = register_images(flo, ref, flo_mask ? &*flo_mask : nullptr,
                                             ref_mask ? &*ref_mask : nullptr,
                                             flo_weights ? &*flo_weights : nullptr,
                                             ref_weights ? &*ref_weights : nullptr, t0, cfg);

    if (!args.out_transform.empty()) write_transform(args.out_transform, res.transform);
    if (!args.out_trace.empty()) write_level_trace_csv(args.out_trace, res);

    std::cout << "measure = " << measure_name(cfg.measure) << "\n";
    std::cout << "model = " << (cfg.model == TransformModel::rigid ? "rigid" : "affine") << "\n";
    std::cout << "params =";
    for (double p : res.transform.params()) std::cout << " " << fmt17(p);
    std::cout << "\n";
    std::cout << "final_distance = " << fmt17(res.final_distance) << "\n";
    std::cout << "total_iterations = " << res.total_iterations << "\n";
    for (const LevelTrace& lt : res.traces)
        std::cout << "level_" << lt.level << "_stop = " << stop_reason_name(lt.trace.reason) << "\n";
    std::cout << "preprocessing_seconds = " << fmt17(res.preprocessing_seconds) << "\n";
    std::cout << "mean_iteration_seconds = " << fmt17(res.mean_iteration_seconds) << "\n";
    if (res.degenerate_normalization) std::cout << "warning = degenerate intensity normalization\n";
    if (res.non_overlap) {
        std::cout << "error = images do not overlap at the solution\n";
        return 2;
    }
    return 0;
}

int cmd_synth(const SynthArgs& args) {
    FuzzyImage base = read_volume(args.image);
    SyntheticConfig sc;
    sc.displacement = parse_class(args.displacement_class);
    sc.trials = args.trials;
    sc.noise_sigma = args.noise_sigma;
    sc.seed = args.seed;
    sc.bidirectional_eval = args.bidirectional_eval;
    sc.registration = default_synthetic_registration();
    if (!args.config.empty()) sc.registration = parse_registration_config(args.config, sc.registration);

    EvaluationReport report = run_synthetic_experiment(base, sc);

    if (!args.out_report.empty()) {
        write_trials_csv(report, args.out_report + "_trials.csv");
        write_cumulative_csv(report, args.out_report + "_cumulative.csv");
        write_summary(report, args.out_report + "_summary.json");
    }
    std::cout << summary_text(report);
    std::cout << "total_seconds = " << fmt17(report.total_seconds) << "\n";
    return 0;
}

int cmd_eval_landmarks(const EvalLandmarksArgs& args) {
    Transform t = read_transform(args.transform);
    int dim = args.dim != 0 ? args.dim : t.ndim();
    LandmarkSet ref = read_landmarks(args.ref_landmarks, dim);
    LandmarkSet flo = read_landmarks(args.flo_landmarks, dim);

    double ae = std::numeric_limits<double>::quiet_NaN();
    if (ref.size() == flo.size()) ae = average_error(t, ref, flo);
    double ame = average_minimal_error(t, ref, flo);
    double outer = std::numeric_limits<double>::quiet_NaN();
    if (ref.labeled() && flo.labeled()) {
        LandmarkSet ro = ref.subset(1), re = ref.subset(0);
        LandmarkSet fo = flo.subset(1), fe = flo.subset(0);
        if (ro.size() && re.size() && fo.size() && fe.size()) outer = ame_outer(t, ro, fo, re, fe);
    }
    if (args.csv) {
        std::cout << "ae,ame,ame_outer\n"
                  << fmt17(ae) << ',' << fmt17(ame) << ',' << fmt17(outer) << "\n";
    } else {
        std::cout << "AE = " << fmt17(ae) << "\n";
        std::cout << "AME = " << fmt17(ame) << "\n";
        if (std::isfinite(outer)) std::cout << "AME_outer = " << fmt17(outer) << "\n";
    }
    return 0;
}

int cmd_eval_ice(const EvalIceArgs& args) {
    Transform fwd = read_transform(args.forward);
    Transform back = read_transform(args.backward);
    VolumeHeader h = read_volume_header(args.ref);
    double ice = inverse_consistency_error(fwd, back, grid_points(h.grid(), args.stride));
    if (args.csv)
        std::cout << "ice\n" << fmt17(ice) << "\n";
    else
        std::cout << "ICE = " << fmt17(ice) << "\n";
    return 0;
}

int cmd_eval_jaccard(const EvalJaccardArgs& args) {
    LabelImage a = read_labels(args.a);
    LabelImage b = read_labels(args.b);
    double j = jaccard(label_mask(a, args.label), label_mask(b, args.label));
    if (args.csv)
        std::cout << "label,jaccard\n" << args.label << ',' << fmt17(j) << "\n";
    else
        std::cout << "Jaccard(" << args.label << ") = " << fmt17(j) << "\n";
    return 0;
}

int cmd_phantom(const PhantomArgs& args) {
    if (args.size < 2) throw config_error("phantom: size must be >= 2");
    Grid g = args.dim == 3 ? Grid::make3(args.size, args.size, args.size)
                           : Grid::make2(args.size, args.size);
    FuzzyImage img;
    if (args.kind == "blobs") {
        img = make_smooth_phantom(g);
    } else if (args.kind == "ring") {
        Vec e = g.extent();
        double min_extent = e[0];
        for (int a = 1; a < g.ndim; ++a) min_extent = std::min(min_extent, e[a]);
        double radius = args.radius > 0.0 ? args.radius : 0.3 * min_extent;
        double width = args.width > 0.0 ? args.width : 0.08 * min_extent;
        img = make_ring_phantom(g, radius, width);
    } else {
        throw config_error("phantom: kind must be blobs or ring (got '" + args.kind + "')");
    }
    if (args.noise_sigma > 0.0) img = add_gaussian_noise(img, args.noise_sigma, args.seed);
    write_volume(args.out, img, ElementType::float32);
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

int cmd_convert(const ConvertArgs& args) {
    FuzzyImage img = ends_with(args.in, ".pgm") ? read_pgm(args.in) : read_volume(args.in);
    if (ends_with(args.out, ".pgm"))
        write_pgm(args.out, img);
    else
        write_volume(args.out, img, parse_element_type(args.type));
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Symmetric intensity- and distance-based image registration toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = all hardware threads)")
        ->check(CLI::NonNegativeNumber);

    int rc = 0;

    RegisterArgs reg;
    CLI::App* c_reg = app.add_subcommand("register", "register a floating image onto a reference image");
    c_reg->add_option("--ref", reg.ref, "reference volume header")->required();
    c_reg->add_option("--flo", reg.flo, "floating volume header")->required();
    c_reg->add_option("--ref-mask", reg.ref_mask, "reference mask volume");
    c_reg->add_option("--flo-mask", reg.flo_mask, "floating mask volume");
    c_reg->add_option("--ref-weights", reg.ref_weights, "reference weight volume");
    c_reg->add_option("--flo-weights", reg.flo_weights, "floating weight volume");
    c_reg->add_option("--init-transform", reg.init_transform, "initial transform file");
    c_reg->add_option("--config", reg.config, "key = value configuration file");
    c_reg->add_option("--out-transform", reg.out_transform, "output transform file");
    c_reg->add_option("--out-trace", reg.out_trace, "output per-iteration trace CSV");
    c_reg->add_option("--measure", reg.measure, "alpha-amd | ssd | pcc | mi");
    c_reg->add_option("--model", reg.model, "rigid | affine");
    c_reg->add_option("--seed", reg.seed, "sampling seed (overrides config)");
    c_reg->callback([&] {
        set_max_threads(threads);
        rc = cmd_register(reg);
    });

    SynthArgs synth;
    CLI::App* c_synth = app.add_subcommand("synth", "synthetic recovery experiment on a base image");
    c_synth->add_option("--image", synth.image, "base volume header")->required();
    c_synth->add_option("--class", synth.displacement_class, "small | medium | large");
    c_synth->add_option("--trials", synth.trials, "number of trials")->check(CLI::PositiveNumber);
    c_synth->add_option("--noise-sigma", synth.noise_sigma, "additive Gaussian noise sigma");
    c_synth->add_option("--seed", synth.seed, "experiment seed");
    c_synth->add_option("--config", synth.config, "registration configuration file");
    c_synth->add_option("--out-report", synth.out_report, "report file prefix");
    c_synth->add_flag("--bidirectional-eval", synth.bidirectional_eval,
                      "also register with exchanged roles (SymSR, ICE)");
    c_synth->callback([&] {
        set_max_threads(threads);
        rc = cmd_synth(synth);
    });

    CLI::App* c_eval = app.add_subcommand("eval", "evaluation metrics");
    c_eval->require_subcommand(1);
    c_eval->fallthrough();

    EvalLandmarksArgs lm;
    CLI::App* c_lm = c_eval->add_subcommand("landmarks", "landmark errors under a transform");
    c_lm->add_option("--ref-landmarks", lm.ref_landmarks, "reference landmark CSV")->required();
    c_lm->add_option("--flo-landmarks", lm.flo_landmarks, "floating landmark CSV")->required();
    c_lm->add_option("--transform", lm.transform, "transform file")->required();
    c_lm->add_option("--dim", lm.dim, "landmark dimension hint (0 = infer)");
    c_lm->add_flag("--csv", lm.csv, "machine-readable output");
    c_lm->callback([&] { rc = cmd_eval_landmarks(lm); });

    EvalIceArgs ice;
    CLI::App* c_ice = c_eval->add_subcommand("ice", "inverse consistency error of a transform pair");
    c_ice->add_option("--forward", ice.forward, "transform out of reference space")->required();
    c_ice->add_option("--backward", ice.backward, "transform back into reference space")->required();
    c_ice->add_option("--ref", ice.ref, "reference volume header (point grid)")->required();
    c_ice->add_option("--stride", ice.stride, "grid point stride")->check(CLI::PositiveNumber);
    c_ice->add_flag("--csv", ice.csv, "machine-readable output");
    c_ice->callback([&] { rc = cmd_eval_ice(ice); });

    EvalJaccardArgs jac;
    CLI::App* c_jac = c_eval->add_subcommand("jaccard", "Jaccard overlap of a label in two volumes");
    c_jac->add_option("--a", jac.a, "first label volume")->required();
    c_jac->add_option("--b", jac.b, "second label volume")->required();
    c_jac->add_option("--label", jac.label, "label id");
    c_jac->add_flag("--csv", jac.csv, "machine-readable output");
    c_jac->callback([&] { rc = cmd_eval_jaccard(jac); });

    PhantomArgs ph;
    CLI::App* c_ph = app.add_subcommand("phantom", "generate a test volume");
    c_ph->add_option("--kind", ph.kind, "blobs | ring");
    c_ph->add_option("--dim", ph.dim, "2 | 3")->check(CLI::Range(2, 3));
    c_ph->add_option("--size", ph.size, "voxels per side");
    c_ph->add_option("--out", ph.out, "output volume header")->required();
    c_ph->add_option("--radius", ph.radius, "ring radius (physical units)");
    c_ph->add_option("--width", ph.width, "ring width (physical units)");
    c_ph->add_option("--noise-sigma", ph.noise_sigma, "additive Gaussian noise sigma");
    c_ph->add_option("--seed", ph.seed, "noise seed");
    c_ph->callback([&] { rc = cmd_phantom(ph); });

    ConvertArgs conv;
    CLI::App* c_conv = app.add_subcommand("convert", "convert between PGM and the volume format");
    c_conv->add_option("--in", conv.in, "input file (.pgm or volume header)")->required();
    c_conv->add_option("--out", conv.out, "output file (.pgm or volume header)")->required();
    c_conv->add_option("--type", conv.type, "volume element type: uint8 | uint16 | float32");
    c_conv->callback([&] { rc = cmd_convert(conv); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
        return 1;
    } catch (const overlap_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}

} // namespace amdreg
