// srtk command-line tool: normalization, metrics, losses, uncertainty and
// the toy end-to-end harness, with portable tensor files and JSON reports.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "image_io.hpp"
#include "srtk/core.hpp"
#include "srtk/flowctl.hpp"
#include "srtk/harness.hpp"
#include "srtk/imgmath.hpp"
#include "srtk/loss.hpp"
#include "srtk/metrics_blind.hpp"
#include "srtk/metrics_ref.hpp"
#include "srtk/normalize.hpp"
#include "srtk/report.hpp"
#include "srtk/tensor_file.hpp"
#include "srtk/version.hpp"

namespace {

namespace fs = std::filesystem;
using srtk::ImageTensor;
using srtk::report::Value;
namespace tf = srtk::tensor_file;

struct UsageError : srtk::Error {
    using srtk::Error::Error;
};

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitShape = 3;
constexpr int kExitUsage = 4;

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

ImageTensor to_unit(const srtk_io::LoadedImage& li) {
    ImageTensor img = li.image;
    if (img.domain == srtk::Domain::RawDN) {
        for (double& v : img.data) v = std::clamp(v / li.peak, 0.0, 1.0);
    } else {
        for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
    }
    img.domain = srtk::Domain::Unit;
    return img;
}

void emit_report(const Value& doc, const std::string& out_path, bool to_stdout) {
    const std::string text = doc.dump();
    if (!out_path.empty()) {
        std::ofstream os(out_path, std::ios::binary);
        if (!os) throw srtk::IoError("cannot write report: " + out_path);
        os << text;
    }
    if (to_stdout || out_path.empty()) std::cout << text;
}

Value report_header(const std::string& command) {
    Value doc = Value::object();
    doc["schema_version"] = srtk::kReportSchemaVersion;
    doc["toolkit_version"] = srtk::kVersion;
    doc["command"] = command;
    return doc;
}

std::vector<double> load_flat_tensor(const std::string& path) {
    return tf::load_tensor(path).values;
}

srtk::metrics_blind::FeatureMatrix load_feature_matrix(const std::string& path) {
    const auto t = tf::load_tensor(path);
    if (t.dims.size() != 2)
        throw srtk::ShapeError("feature matrix must be a 2-D tensor: " + path);
    srtk::metrics_blind::FeatureMatrix fm;
    fm.n = static_cast<int>(t.dims[0]);
    fm.d = static_cast<int>(t.dims[1]);
    fm.data = t.values;
    return fm;
}

// Feature stack file: repeated pairs of (H x W x C features, length-C weights).
srtk::loss::FeatureStack load_feature_stack(const std::string& path) {
    const auto tensors = tf::load_tensor_sequence(path);
    if (tensors.size() % 2 != 0)
        throw srtk::ShapeError("feature stack must hold (features, weights) pairs: " + path);
    srtk::loss::FeatureStack stack;
    for (std::size_t i = 0; i < tensors.size(); i += 2) {
        srtk::loss::FeatureLayer layer;
        layer.features = tf::to_image(tensors[i], srtk::Domain::Latent);
        if (tensors[i + 1].dims.size() != 1)
            throw srtk::ShapeError("feature stack weights must be 1-D: " + path);
        layer.weights = tensors[i + 1].values;
        stack.layers.push_back(std::move(layer));
    }
    return stack;
}

// NIQE model file: mu (d), covariance (d x d), params (patch, scales, threshold).
void save_niqe_model(const std::string& path, const srtk::metrics_blind::NiqeModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw srtk::IoError("cannot write model: " + path);
    tf::Tensor mu;
    mu.dims = {static_cast<std::uint32_t>(m.mu.size())};
    mu.values = m.mu;
    tf::write_tensor(os, mu);
    tf::Tensor cov;
    cov.dims = {static_cast<std::uint32_t>(m.cov.rows),
                static_cast<std::uint32_t>(m.cov.cols)};
    cov.values = m.cov.a;
    tf::write_tensor(os, cov);
    tf::Tensor params;
    params.dims = {3};
    params.values = {static_cast<double>(m.patch_size), static_cast<double>(m.scales),
                     m.sharpness_threshold};
    tf::write_tensor(os, params);
}

srtk::metrics_blind::NiqeModel load_niqe_model(const std::string& path) {
    const auto tensors = tf::load_tensor_sequence(path);
    if (tensors.size() != 3 || tensors[1].dims.size() != 2)
        throw srtk::IoError("niqe model file must hold mu, covariance, params: " + path);
    srtk::metrics_blind::NiqeModel m;
    m.mu = tensors[0].values;
    m.cov = srtk::linalg::Mat(static_cast<int>(tensors[1].dims[0]),
                              static_cast<int>(tensors[1].dims[1]));
    m.cov.a = tensors[1].values;
    if (tensors[2].values.size() != 3)
        throw srtk::IoError("niqe model params tensor must hold 3 values: " + path);
    m.patch_size = static_cast<int>(tensors[2].values[0]);
    m.scales = static_cast<int>(tensors[2].values[1]);
    m.sharpness_threshold = tensors[2].values[2];
    return m;
}

// NIQE features are extracted on a [0,255] luminance scale.
ImageTensor niqe_scale(const ImageTensor& unit_img) {
    ImageTensor gray = srtk::imgmath::luminance(unit_img);
    for (double& v : gray.data) v *= 255.0;
    gray.domain = srtk::Domain::Latent;
    return gray;
}

ImageTensor niqe_input(const srtk_io::LoadedImage& li) { return niqe_scale(to_unit(li)); }

std::vector<double> parse_csv_doubles(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok = csv.substr(pos, comma == std::string::npos ? csv.size() - pos
                                                                           : comma - pos);
        if (!tok.empty()) {
            try {
                out.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw UsageError("cannot parse number '" + tok + "'");
            }
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// normalize
// ---------------------------------------------------------------------------

struct NormalizeArgs {
    std::string input, output;
    std::string mode = "percentile";
    double plow = 2.0, phigh = 98.0;
    double min_val = 0.0, max_val = 3000.0;
    int bits = 0;
    std::string dtype = "f64";
    std::string report_path;
    bool to_stdout = false;
};

int cmd_normalize(const NormalizeArgs& a) {
    const auto loaded = srtk_io::load_image(a.input, a.bits);
    srtk::normalize::NormResult res;
    if (a.mode == "percentile") {
        res = srtk::normalize::percentile_normalize(loaded.image, {a.plow, a.phigh});
    } else if (a.mode == "fixed") {
        res = srtk::normalize::fixed_range_normalize(loaded.image, {a.min_val, a.max_val});
    } else {
        throw UsageError("unknown normalization mode '" + a.mode + "'");
    }

    tf::Dtype dtype;
    if (a.dtype == "f64")
        dtype = tf::Dtype::F64;
    else if (a.dtype == "f32")
        dtype = tf::Dtype::F32;
    else
        throw UsageError("output dtype must be f32 or f64");
    tf::save_tensor(a.output, tf::from_image(res.image, dtype));

    Value doc = report_header("normalize");
    Value params = Value::object();
    params["input"] = a.input;
    params["output"] = a.output;
    params["mode"] = a.mode;
    if (a.mode == "percentile") {
        params["p_low"] = a.plow;
        params["p_high"] = a.phigh;
        params["percentile_estimator"] = "linear interpolation, inclusive endpoints";
    } else {
        params["min"] = a.min_val;
        params["max"] = a.max_val;
    }
    params["input_format"] = loaded.format;
    params["input_bits"] = loaded.bit_depth;
    params["input_peak"] = loaded.peak;
    params["dtype"] = a.dtype;
    doc["parameters"] = params;
    Value bands = Value::array();
    for (std::size_t b = 0; b < res.lo.size(); ++b) {
        Value band = Value::object();
        band["band"] = static_cast<std::int64_t>(b);
        band["lo"] = res.lo[b];
        band["hi"] = res.hi[b];
        bands.push_back(band);
    }
    doc["bands"] = bands;
    Value warn = Value::array();
    for (const auto& w : res.warnings) warn.push_back(w);
    doc["warnings"] = warn;

    const std::string rep_path =
        a.report_path.empty() ? a.output + ".report.json" : a.report_path;
    emit_report(doc, rep_path, a.to_stdout);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

struct MetricsArgs {
    std::vector<std::string> refs, tests;
    std::string metrics_csv = "psnr,ssim";
    int bits = 0;
    double peak = 1.0;
    std::string features_a, features_b;
    std::string dists_alpha_csv, dists_beta_csv;
    std::string niqe_model;
    std::string qnr_ms, qnr_pan;
    double qnr_alpha = 1.0, qnr_beta = 1.0;
    int qnr_window = 8;
    std::string nll_y, nll_mu, nll_sigma;
    std::string ece_y, ece_quantiles, ece_levels, ece_weights;
    std::string out_path;
    bool to_stdout = false;
};

const std::vector<std::string> kKnownMetrics = {"psnr", "ssim", "fsim", "sam",
                                                "de2000", "dists", "fid", "niqe",
                                                "qnr", "nll", "ece"};

std::vector<std::string> parse_metric_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok = csv.substr(pos, comma == std::string::npos ? csv.size() - pos
                                                                           : comma - pos);
        if (!tok.empty()) {
            if (std::find(kKnownMetrics.begin(), kKnownMetrics.end(), tok) ==
                kKnownMetrics.end())
                throw UsageError("unknown metric '" + tok + "'");
            out.push_back(tok);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw UsageError("no metrics requested");
    return out;
}

bool wants(const std::vector<std::string>& list, const std::string& name) {
    return std::find(list.begin(), list.end(), name) != list.end();
}

int cmd_metrics(const MetricsArgs& a) {
    const auto requested = parse_metric_list(a.metrics_csv);
    const bool pairwise = wants(requested, "psnr") || wants(requested, "ssim") ||
                          wants(requested, "fsim") || wants(requested, "sam") ||
                          wants(requested, "de2000");
    const bool per_test = wants(requested, "niqe") || wants(requested, "qnr");

    if (pairwise && (a.refs.empty() || a.refs.size() != a.tests.size()))
        throw UsageError("full-reference metrics need matching --ref/--test lists");
    if (per_test && a.tests.empty())
        throw UsageError("niqe/qnr need at least one --test image");
    if (wants(requested, "fid") && (a.features_a.empty() || a.features_b.empty()))
        throw UsageError("fid needs --features-a and --features-b feature matrices");
    if (wants(requested, "dists") && (a.features_a.empty() || a.features_b.empty()))
        throw UsageError("dists needs --features-a and --features-b feature stacks");
    if (wants(requested, "niqe") && a.niqe_model.empty())
        throw UsageError("niqe needs --niqe-model");
    if (wants(requested, "qnr") && (a.qnr_ms.empty() || a.qnr_pan.empty()))
        throw UsageError("qnr needs --qnr-ms and --qnr-pan");
    if (wants(requested, "nll") &&
        (a.nll_y.empty() || a.nll_mu.empty() || a.nll_sigma.empty()))
        throw UsageError("nll needs --nll-y, --nll-mu, --nll-sigma");
    if (wants(requested, "ece") &&
        (a.ece_y.empty() || a.ece_quantiles.empty() || a.ece_levels.empty()))
        throw UsageError("ece needs --ece-y, --ece-quantiles, --ece-levels");

    Value doc = report_header("metrics");
    Value params = Value::object();
    Value mlist = Value::array();
    for (const auto& m : requested) mlist.push_back(m);
    params["metrics"] = mlist;
    params["bits"] = a.bits;
    params["peak"] = a.peak;
    Value conv = Value::object();
    conv["sample_scale"] = "integer inputs divided by peak, clipped to [0,1]";
    conv["luma"] = "rec709";
    conv["ssim"] = "11x11 gaussian window, sigma 1.5, K1 0.01, K2 0.03, valid positions";
    conv["fsim"] =
        "log-gabor PC, 4 scales, 4 orientations, T1 0.85, T2 160 on [0,255] scale";
    conv["qnr"] = "wang-bovik Q, 8x8 sliding window, |dQ| clipped to [0,1]";
    conv["nll_reduction"] = "mean per element";
    doc["parameters"] = params;
    doc["conventions"] = conv;
    Value warnings = Value::array();

    // per-pair full-reference block, evaluated by a small worker pool
    Value items = Value::array();
    if (pairwise || per_test) {
        const std::size_t count = pairwise ? a.refs.size() : a.tests.size();
        std::optional<srtk::metrics_blind::NiqeModel> niqe_model;
        if (wants(requested, "niqe")) niqe_model = load_niqe_model(a.niqe_model);
        std::optional<ImageTensor> qnr_ms, qnr_pan;
        if (wants(requested, "qnr")) {
            qnr_ms = to_unit(srtk_io::load_image(a.qnr_ms, a.bits));
            qnr_pan = to_unit(srtk_io::load_image(a.qnr_pan, a.bits));
        }

        auto eval_item = [&](std::size_t i) {
            Value item = Value::object();
            if (pairwise) item["ref"] = a.refs[i];
            item["test"] = a.tests[i];
            const ImageTensor test = to_unit(srtk_io::load_image(a.tests[i], a.bits));
            if (pairwise) {
                const ImageTensor ref = to_unit(srtk_io::load_image(a.refs[i], a.bits));
                if (wants(requested, "psnr"))
                    item["psnr"] = srtk::metrics_ref::psnr(ref, test, a.peak);
                if (wants(requested, "ssim"))
                    item["ssim"] = srtk::metrics_ref::ssim(ref, test);
                if (wants(requested, "fsim"))
                    item["fsim"] = srtk::metrics_ref::fsim(ref, test);
                if (wants(requested, "sam")) {
                    std::size_t excluded = 0;
                    item["sam_deg"] = srtk::metrics_ref::sam_degrees(ref, test, &excluded);
                    item["sam_excluded_pixels"] = excluded;
                }
                if (wants(requested, "de2000"))
                    item["de2000"] = srtk::metrics_ref::delta_e2000(
                        srtk::imgmath::srgb_to_lab(ref), srtk::imgmath::srgb_to_lab(test));
            }
            if (wants(requested, "niqe")) {
                bool used_pinv = false;
                item["niqe"] =
                    srtk::metrics_blind::niqe(niqe_scale(test), *niqe_model, &used_pinv);
                if (used_pinv) item["niqe_pinv"] = true;
            }
            if (wants(requested, "qnr")) {
                const auto q = srtk::metrics_blind::qnr(test, *qnr_ms, *qnr_pan,
                                                        a.qnr_alpha, a.qnr_beta,
                                                        a.qnr_window);
                item["d_lambda"] = q.d_lambda;
                item["d_s"] = q.d_s;
                item["qnr"] = q.qnr;
            }
            return item;
        };

        std::vector<std::future<Value>> futures;
        futures.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            futures.push_back(std::async(std::launch::async, eval_item, i));
        for (auto& f : futures) items.push_back(f.get());
    }
    doc["items"] = items;

    Value set_metrics = Value::object();
    if (wants(requested, "fid")) {
        std::vector<std::string> fid_warn;
        set_metrics["fid"] = srtk::metrics_blind::fid(load_feature_matrix(a.features_a),
                                                      load_feature_matrix(a.features_b),
                                                      &fid_warn);
        for (const auto& w : fid_warn) warnings.push_back(w);
    }
    if (wants(requested, "dists")) {
        const auto fa = load_feature_stack(a.features_a);
        const auto fb = load_feature_stack(a.features_b);
        std::vector<double> alpha, beta;
        if (!a.dists_alpha_csv.empty()) alpha = parse_csv_doubles(a.dists_alpha_csv);
        if (!a.dists_beta_csv.empty()) beta = parse_csv_doubles(a.dists_beta_csv);
        const double uniform = 0.5 / static_cast<double>(fa.layers.size());
        if (alpha.empty()) alpha.assign(fa.layers.size(), uniform);
        if (beta.empty()) beta.assign(fa.layers.size(), uniform);
        int degen = 0;
        set_metrics["dists"] =
            srtk::metrics_ref::dists_from_features(fa, fb, alpha, beta, &degen);
        if (degen > 0)
            warnings.push_back("dists: " + std::to_string(degen) +
                               " degenerate correlation terms (constant features)");
    }
    if (wants(requested, "nll")) {
        set_metrics["nll"] = srtk::metrics_blind::gaussian_nll(
            load_flat_tensor(a.nll_y), load_flat_tensor(a.nll_mu),
            load_flat_tensor(a.nll_sigma));
    }
    if (wants(requested, "ece")) {
        srtk::metrics_blind::QuantileForecast fc;
        fc.levels = load_flat_tensor(a.ece_levels);
        fc.quantiles = load_flat_tensor(a.ece_quantiles);
        if (!a.ece_weights.empty())
            fc.weights = load_flat_tensor(a.ece_weights);
        else
            fc.weights.assign(fc.levels.size(), 1.0 / static_cast<double>(fc.levels.size()));
        set_metrics["ece"] = srtk::metrics_blind::ece_regression(fc, load_flat_tensor(a.ece_y));
    }
    doc["set_metrics"] = set_metrics;
    doc["warnings"] = warnings;

    emit_report(doc, a.out_path, a.to_stdout);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------

struct LossArgs {
    std::string pred, target, z0;
    double sigma_t = 0.5;
    std::string omega = "uniform";
    double gamma = 1.0, blur_sigma = 3.0;
    double lambda_fft = 1.0, lambda_color = 1.0, lambda_lpips = 1.0;
    std::string features_a, features_b;
    std::string grad_out;
    std::string fft_space = "pixel";
    std::string latent_pred, latent_target;
    int bits = 0;
    std::string out_path;
    bool to_stdout = false;
};

int cmd_loss(const LossArgs& a) {
    srtk::loss::LossWeights weights;
    weights.lambda_fft = a.lambda_fft;
    weights.lambda_color = a.lambda_color;
    weights.lambda_lpips = a.lambda_lpips;
    weights.gamma = a.gamma;
    weights.blur_sigma = a.blur_sigma;
    if (a.omega == "uniform")
        weights.omega_mode = srtk::loss::OmegaMode::Uniform;
    else if (a.omega == "inv-sigma-sq")
        weights.omega_mode = srtk::loss::OmegaMode::InverseSigmaSq;
    else
        throw UsageError("omega must be 'uniform' or 'inv-sigma-sq'");
    if (a.fft_space != "pixel" && a.fft_space != "latent")
        throw UsageError("fft-space must be 'pixel' or 'latent'");
    const bool latent_fft = a.fft_space == "latent";
    if (latent_fft && (a.latent_pred.empty() || a.latent_target.empty()))
        throw UsageError("latent fft space needs --latent-pred and --latent-target");

    const ImageTensor pred = to_unit(srtk_io::load_image(a.pred, a.bits));
    const ImageTensor target = to_unit(srtk_io::load_image(a.target, a.bits));
    const ImageTensor z0 =
        a.z0.empty() ? target : to_unit(srtk_io::load_image(a.z0, a.bits));

    std::optional<srtk::loss::FeatureStack> fa, fb;
    if (!a.features_a.empty() && !a.features_b.empty()) {
        fa = load_feature_stack(a.features_a);
        fb = load_feature_stack(a.features_b);
    } else if (!a.features_a.empty() || !a.features_b.empty()) {
        throw UsageError("perceptual term needs both --features-a and --features-b");
    }

    const bool want_grad = !a.grad_out.empty();
    srtk::loss::LossBreakdown breakdown;
    if (latent_fft) {
        // fft on caller-provided latents; its gradient w.r.t. the pixel
        // prediction is excluded, like the perceptual term
        srtk::loss::LossWeights pixel_part = weights;
        pixel_part.lambda_fft = 0.0;
        breakdown = srtk::loss::total_loss(pred, target, z0, a.sigma_t,
                                           fa ? &*fa : nullptr, fb ? &*fb : nullptr,
                                           pixel_part, want_grad);
        const ImageTensor lp =
            tf::to_image(tf::load_tensor(a.latent_pred), srtk::Domain::Latent);
        const ImageTensor lt =
            tf::to_image(tf::load_tensor(a.latent_target), srtk::Domain::Latent);
        breakdown.fft = srtk::loss::fft_loss(lp, lt, weights.gamma);
        breakdown.total = breakdown.base + weights.lambda_fft * breakdown.fft +
                          weights.lambda_color * breakdown.color +
                          weights.lambda_lpips * breakdown.perceptual;
    } else {
        breakdown = srtk::loss::total_loss(pred, target, z0, a.sigma_t,
                                           fa ? &*fa : nullptr, fb ? &*fb : nullptr,
                                           weights, want_grad);
    }

    if (want_grad) {
        if (!breakdown.grad) throw srtk::NumericalError("gradient missing");
        tf::save_tensor(a.grad_out, tf::from_image(*breakdown.grad, tf::Dtype::F64));
    }

    Value doc = report_header("loss");
    Value params = Value::object();
    params["pred"] = a.pred;
    params["target"] = a.target;
    params["z0"] = a.z0.empty() ? a.target : a.z0;
    params["sigma_t"] = a.sigma_t;
    params["omega"] = a.omega;
    params["gamma"] = a.gamma;
    params["blur_sigma"] = a.blur_sigma;
    params["lambda_fft"] = a.lambda_fft;
    params["lambda_color"] = a.lambda_color;
    params["lambda_lpips"] = a.lambda_lpips;
    params["fft_space"] = a.fft_space;
    params["reduction"] = "mean over elements for every component";
    params["color_stats"] = "mu and population stdev, averaged over 3 channels";
    doc["parameters"] = params;
    Value bd = Value::object();
    bd["base"] = breakdown.base;
    bd["fft"] = breakdown.fft;
    bd["color"] = breakdown.color;
    bd["perceptual"] = breakdown.perceptual;
    bd["perceptual_present"] = breakdown.perceptual_present;
    bd["total"] = breakdown.total;
    doc["breakdown"] = bd;
    doc["grad_out"] = want_grad ? Value(a.grad_out) : Value(nullptr);
    if (want_grad && latent_fft) {
        Value warn = Value::array();
        warn.push_back("gradient excludes the latent-space fft term");
        doc["warnings"] = warn;
    }

    emit_report(doc, a.out_path, a.to_stdout);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// uncertainty
// ---------------------------------------------------------------------------

struct UncertaintyArgs {
    std::vector<std::string> samples;
    std::string mode = "kappa";
    double kappa = 1e-3;
    std::string var_out;
    std::string out_path;
    bool to_stdout = false;
};

int cmd_uncertainty(const UncertaintyArgs& a) {
    if (a.samples.size() < 2)
        throw srtk::InsufficientSamples("uncertainty needs at least 2 sample tensors");
    std::vector<ImageTensor> samples;
    for (const auto& p : a.samples) {
        auto img = srtk_io::load_image(p).image;
        img.domain = srtk::Domain::Latent;
        samples.push_back(std::move(img));
    }
    const ImageTensor vmap = srtk::flowctl::variance_map(samples);
    const double mean_v = srtk::imgmath::mean(vmap);

    srtk::flowctl::UncertaintyResult res;
    if (a.mode == "kappa") {
        res = srtk::flowctl::u_fixed_kappa(vmap, a.kappa);
    } else if (a.mode == "tau") {
        res = srtk::flowctl::u_from_tau(
            vmap, srtk::flowctl::tau_from_batch(std::vector<double>{mean_v}));
    } else {
        throw UsageError("mode must be 'tau' or 'kappa'");
    }
    if (!a.var_out.empty())
        tf::save_tensor(a.var_out, tf::from_image(res.variance, tf::Dtype::F64));

    Value doc = report_header("uncertainty");
    Value params = Value::object();
    Value files = Value::array();
    for (const auto& p : a.samples) files.push_back(p);
    params["samples"] = files;
    params["mode"] = srtk::flowctl::uncertainty_mode_name(res.mode);
    if (a.mode == "kappa") params["kappa"] = a.kappa;
    params["variance_estimator"] = "unbiased (T-1 divisor)";
    params["u_reduction"] = "mean over all pixels and channels jointly";
    doc["parameters"] = params;
    Value r = Value::object();
    r["t_mc"] = static_cast<std::int64_t>(a.samples.size());
    r["mean_variance"] = mean_v;
    r["scale"] = res.scale;
    r["u"] = res.u;
    doc["result"] = r;
    doc["variance_out"] = a.var_out.empty() ? Value(nullptr) : Value(a.var_out);

    emit_report(doc, a.out_path, a.to_stdout);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// harness
// ---------------------------------------------------------------------------

struct HarnessArgs {
    std::string config_path;
    std::uint64_t seed = 42;
    int size = 64, scale = 4, t_mc = 8;
    double dropout = 0.1;
    std::string mode = "kappa";
    double kappa = 1e-3;
    double sigma_t = 0.5;
    double s_ctrl = 1.0;
    std::vector<std::string> blocks;  // name:p0,pt,pu
    std::string out_path;
    bool to_stdout = false;
};

srtk::harness::HarnessConfig config_from_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw srtk::IoError("cannot open config: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw srtk::IoError("config parse error: " + std::string(e.what()));
    }
    srtk::harness::HarnessConfig c;
    c.seed = j.value("seed", c.seed);
    c.size = j.value("size", c.size);
    c.scale_factor = j.value("scale_factor", c.scale_factor);
    c.t_mc = j.value("t_mc", c.t_mc);
    c.p_do = j.value("p_do", c.p_do);
    if (j.contains("uncertainty_mode"))
        c.mode = j["uncertainty_mode"] == "percentile-tau"
                     ? srtk::flowctl::UncertaintyMode::PercentileTau
                     : srtk::flowctl::UncertaintyMode::FixedKappa;
    c.kappa = j.value("kappa", c.kappa);
    c.sigma_t = j.value("sigma_t", c.sigma_t);
    if (j.contains("s_ctrl")) c.gates.s_ctrl = j["s_ctrl"];
    if (j.contains("gate_blocks"))
        for (const auto& [name, g] : j["gate_blocks"].items())
            c.gates.blocks[name] = {g.value("p0", 0.0), g.value("pt", 0.0),
                                    g.value("pu", 0.0)};
    if (j.contains("loss_weights")) {
        const auto& w = j["loss_weights"];
        c.weights.lambda_fft = w.value("lambda_fft", c.weights.lambda_fft);
        c.weights.lambda_color = w.value("lambda_color", c.weights.lambda_color);
        c.weights.lambda_lpips = w.value("lambda_lpips", c.weights.lambda_lpips);
        c.weights.gamma = w.value("gamma", c.weights.gamma);
        c.weights.blur_sigma = w.value("blur_sigma", c.weights.blur_sigma);
        if (w.contains("omega_mode"))
            c.weights.omega_mode = w["omega_mode"] == "inv-sigma-sq"
                                       ? srtk::loss::OmegaMode::InverseSigmaSq
                                       : srtk::loss::OmegaMode::Uniform;
    }
    return c;
}

int cmd_harness(const HarnessArgs& a, const CLI::App* sub) {
    srtk::harness::HarnessConfig config;
    if (!a.config_path.empty()) config = config_from_json(a.config_path);

    auto passed = [&](const std::string& flag) { return sub->count(flag) > 0; };
    if (a.config_path.empty() || passed("--seed")) config.seed = a.seed;
    if (a.config_path.empty() || passed("--size")) config.size = a.size;
    if (a.config_path.empty() || passed("--scale")) config.scale_factor = a.scale;
    if (a.config_path.empty() || passed("--t")) config.t_mc = a.t_mc;
    if (a.config_path.empty() || passed("--dropout")) config.p_do = a.dropout;
    if (a.config_path.empty() || passed("--mode"))
        config.mode = a.mode == "tau" ? srtk::flowctl::UncertaintyMode::PercentileTau
                                      : srtk::flowctl::UncertaintyMode::FixedKappa;
    if (a.config_path.empty() || passed("--kappa")) config.kappa = a.kappa;
    if (a.config_path.empty() || passed("--sigma-t")) config.sigma_t = a.sigma_t;
    if (a.config_path.empty() || passed("--s-ctrl")) config.gates.s_ctrl = a.s_ctrl;
    for (const auto& spec : a.blocks) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos)
            throw UsageError("block spec must be name:p0,pt,pu");
        const auto vals = parse_csv_doubles(spec.substr(colon + 1));
        if (vals.size() != 3) throw UsageError("block spec must be name:p0,pt,pu");
        config.gates.blocks[spec.substr(0, colon)] = {vals[0], vals[1], vals[2]};
    }

    const auto rep = srtk::harness::run_pipeline(config);
    emit_report(srtk::harness::run_report_to_value(rep), a.out_path, a.to_stdout);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gate
// ---------------------------------------------------------------------------

struct GateArgs {
    double p0 = 0.0, pt = 0.0, pu = 0.0;
    double t_norm = 0.0, u = 0.0;
    double s_ctrl = 1.0;
    int steps = 0;
    double shift = 1.0;
    std::string residual, blend_out;
    std::string out_path;
    bool to_stdout = false;
};

int cmd_gate(const GateArgs& a) {
    srtk::flowctl::GateParams params;
    params.s_ctrl = a.s_ctrl;
    params.blocks["block"] = {a.p0, a.pt, a.pu};
    const double alpha = srtk::flowctl::gate_alpha(params, "block", a.t_norm, a.u);

    Value doc = report_header("gate");
    Value p = Value::object();
    p["p0"] = a.p0;
    p["pt"] = a.pt;
    p["pu"] = a.pu;
    p["s_ctrl"] = a.s_ctrl;
    p["t_norm"] = a.t_norm;
    p["u"] = a.u;
    doc["parameters"] = p;
    doc["alpha"] = alpha;

    if (a.steps > 0) {
        const auto sch = srtk::flowctl::make_schedule(a.steps, a.shift);
        Value sv = Value::object();
        sv["steps"] = a.steps;
        sv["shift"] = a.shift;
        Value sigmas = Value::array();
        Value alphas = Value::array();
        for (int t = 1; t <= a.steps; ++t) {
            sigmas.push_back(sch.sigmas[t - 1]);
            alphas.push_back(srtk::flowctl::gate_alpha(
                params, "block", static_cast<double>(t) / a.steps, a.u));
        }
        sv["sigmas"] = sigmas;
        sv["alpha_trajectory"] = alphas;
        doc["schedule"] = sv;
    }

    if (!a.residual.empty()) {
        if (a.blend_out.empty())
            throw UsageError("--residual needs --blend-out for the result tensor");
        const ImageTensor r =
            tf::to_image(tf::load_tensor(a.residual), srtk::Domain::Latent);
        const ImageTensor blended = srtk::flowctl::blend_residual(r, alpha, a.s_ctrl);
        tf::save_tensor(a.blend_out, tf::from_image(blended, tf::Dtype::F64));
        double n_in = 0.0, n_out = 0.0;
        for (std::size_t i = 0; i < r.data.size(); ++i) {
            n_in += r.data[i] * r.data[i];
            n_out += blended.data[i] * blended.data[i];
        }
        Value b = Value::object();
        b["residual"] = a.residual;
        b["blend_out"] = a.blend_out;
        b["residual_norm"] = std::sqrt(n_in);
        b["blended_norm"] = std::sqrt(n_out);
        doc["blend"] = b;
    }

    emit_report(doc, a.out_path, a.to_stdout);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// niqe-fit
// ---------------------------------------------------------------------------

struct NiqeFitArgs {
    std::vector<std::string> images;
    std::string out_path;
    int patch = 96;
    double sharpness = 0.75;
    int scales = 2;
    int bits = 0;
};

int cmd_niqe_fit(const NiqeFitArgs& a) {
    std::vector<ImageTensor> grays;
    for (const auto& p : a.images)
        grays.push_back(niqe_input(srtk_io::load_image(p, a.bits)));
    const auto model =
        srtk::metrics_blind::fit_niqe_model(grays, a.patch, a.sharpness, a.scales);
    save_niqe_model(a.out_path, model);
    std::cerr << "fitted niqe model: d=" << model.mu.size() << " from "
              << a.images.size() << " image(s)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"srtk: super-resolution evaluation and uncertainty toolkit"};
    app.require_subcommand(1);

    NormalizeArgs na;
    auto* norm = app.add_subcommand("normalize", "normalize a multiband image to [0,1]");
    norm->add_option("input", na.input)->required();
    norm->add_option("output", na.output)->required();
    norm->add_option("--mode", na.mode, "percentile or fixed");
    norm->add_option("--plow", na.plow);
    norm->add_option("--phigh", na.phigh);
    norm->add_option("--min", na.min_val);
    norm->add_option("--max", na.max_val);
    norm->add_option("--bits", na.bits, "declared bit depth of integer inputs");
    norm->add_option("--dtype", na.dtype, "output dtype: f32 or f64");
    norm->add_option("--report", na.report_path);
    norm->add_flag("--stdout", na.to_stdout);

    MetricsArgs ma;
    auto* met = app.add_subcommand("metrics", "image quality metrics");
    met->add_option("--ref", ma.refs)->take_all();
    met->add_option("--test", ma.tests)->take_all();
    met->add_option("--metrics", ma.metrics_csv, "comma list of metric names");
    met->add_option("--bits", ma.bits);
    met->add_option("--peak", ma.peak, "psnr peak on the unit scale");
    met->add_option("--features-a", ma.features_a);
    met->add_option("--features-b", ma.features_b);
    met->add_option("--dists-alpha", ma.dists_alpha_csv);
    met->add_option("--dists-beta", ma.dists_beta_csv);
    met->add_option("--niqe-model", ma.niqe_model);
    met->add_option("--qnr-ms", ma.qnr_ms);
    met->add_option("--qnr-pan", ma.qnr_pan);
    met->add_option("--qnr-alpha", ma.qnr_alpha);
    met->add_option("--qnr-beta", ma.qnr_beta);
    met->add_option("--qnr-window", ma.qnr_window);
    met->add_option("--nll-y", ma.nll_y);
    met->add_option("--nll-mu", ma.nll_mu);
    met->add_option("--nll-sigma", ma.nll_sigma);
    met->add_option("--ece-y", ma.ece_y);
    met->add_option("--ece-quantiles", ma.ece_quantiles);
    met->add_option("--ece-levels", ma.ece_levels);
    met->add_option("--ece-weights", ma.ece_weights);
    met->add_option("--out", ma.out_path);
    met->add_flag("--stdout", ma.to_stdout);

    LossArgs la;
    auto* los = app.add_subcommand("loss", "training objective and gradients");
    los->add_option("--pred", la.pred)->required();
    los->add_option("--target", la.target)->required();
    los->add_option("--z0", la.z0);
    los->add_option("--sigma-t", la.sigma_t);
    los->add_option("--omega", la.omega, "uniform or inv-sigma-sq");
    los->add_option("--gamma", la.gamma);
    los->add_option("--blur-sigma", la.blur_sigma);
    los->add_option("--lambda-fft", la.lambda_fft);
    los->add_option("--lambda-color", la.lambda_color);
    los->add_option("--lambda-lpips", la.lambda_lpips);
    los->add_option("--features-a", la.features_a);
    los->add_option("--features-b", la.features_b);
    los->add_option("--grad-out", la.grad_out);
    los->add_option("--fft-space", la.fft_space, "pixel or latent");
    los->add_option("--latent-pred", la.latent_pred);
    los->add_option("--latent-target", la.latent_target);
    los->add_option("--bits", la.bits);
    los->add_option("--out", la.out_path);
    los->add_flag("--stdout", la.to_stdout);

    UncertaintyArgs ua;
    auto* unc = app.add_subcommand("uncertainty", "MC-dropout uncertainty from samples");
    unc->add_option("samples", ua.samples, "sample tensors")->required();
    unc->add_option("--mode", ua.mode, "tau or kappa");
    unc->add_option("--kappa", ua.kappa);
    unc->add_option("--var-out", ua.var_out);
    unc->add_option("--out", ua.out_path);
    unc->add_flag("--stdout", ua.to_stdout);

    HarnessArgs ha;
    auto* har = app.add_subcommand("harness", "desk-scale uncertainty-gate pipeline");
    har->add_option("--config", ha.config_path, "JSON config file");
    har->add_option("--seed", ha.seed);
    har->add_option("--size", ha.size);
    har->add_option("--scale", ha.scale);
    har->add_option("--t", ha.t_mc);
    har->add_option("--dropout", ha.dropout);
    har->add_option("--mode", ha.mode, "tau or kappa");
    har->add_option("--kappa", ha.kappa);
    har->add_option("--sigma-t", ha.sigma_t);
    har->add_option("--s-ctrl", ha.s_ctrl);
    har->add_option("--block", ha.blocks, "gate block as name:p0,pt,pu")->take_all();
    har->add_option("--out", ha.out_path);
    har->add_flag("--stdout", ha.to_stdout);

    GateArgs ga;
    auto* gate = app.add_subcommand("gate", "uncertainty-gated control scalar");
    gate->add_option("--p0", ga.p0);
    gate->add_option("--pt", ga.pt);
    gate->add_option("--pu", ga.pu);
    gate->add_option("--t-norm", ga.t_norm);
    gate->add_option("--u", ga.u);
    gate->add_option("--s-ctrl", ga.s_ctrl);
    gate->add_option("--steps", ga.steps, "also report a schedule trajectory");
    gate->add_option("--shift", ga.shift);
    gate->add_option("--residual", ga.residual, "residual tensor to blend");
    gate->add_option("--blend-out", ga.blend_out);
    gate->add_option("--out", ga.out_path);
    gate->add_flag("--stdout", ga.to_stdout);

    NiqeFitArgs nf;
    auto* fit = app.add_subcommand("niqe-fit", "fit a pristine niqe model");
    fit->add_option("images", nf.images)->required();
    fit->add_option("--out", nf.out_path)->required();
    fit->add_option("--patch", nf.patch);
    fit->add_option("--sharpness", nf.sharpness);
    fit->add_option("--scales", nf.scales);
    fit->add_option("--bits", nf.bits);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (norm->parsed()) return cmd_normalize(na);
        if (met->parsed()) return cmd_metrics(ma);
        if (los->parsed()) return cmd_loss(la);
        if (unc->parsed()) return cmd_uncertainty(ua);
        if (har->parsed()) return cmd_harness(ha, har);
        if (gate->parsed()) return cmd_gate(ga);
        if (fit->parsed()) return cmd_niqe_fit(nf);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const srtk::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const srtk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitShape;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitShape;
    }
    return kExitOk;
}
