// uif: command-line front end for feature extraction, training, scoring,
// cross-validated evaluation and subjective-score processing.

#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "uif/uif.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kPartial = 2, kUsage = 64, kData = 65, kNoInput = 66 };

int exit_code_for(uif::ErrorKind kind) {
    switch (kind) {
        case uif::ErrorKind::Usage:
        case uif::ErrorKind::InvalidMask:
            return kUsage;
        case uif::ErrorKind::Io:
            return kNoInput;
        default:
            return kData;
    }
}

class Log {
public:
    Log() : color_(std::getenv("UIF_NO_COLOR") == nullptr && ::isatty(STDERR_FILENO) == 1) {}

    void info(const std::string& msg) const { emit("", "info", msg); }
    void warn(const std::string& msg) const { emit("\x1b[33m", "warning", msg); }
    void error(const std::string& msg) const { emit("\x1b[31m", "error", msg); }

private:
    void emit(const char* style, const char* tag, const std::string& msg) const {
        if (color_ && *style) {
            std::cerr << style << tag << "\x1b[0m: " << msg << '\n';
        } else {
            std::cerr << tag << ": " << msg << '\n';
        }
    }
    bool color_;
};

const Log& log() {
    static const Log l;
    return l;
}

// Writes to `path`, or standard output when empty.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty()) return;
        file_.open(path, std::ios::binary | std::ios::trunc);
        if (!file_) throw uif::Error(uif::ErrorKind::Io, "cannot write '" + path + "'");
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

void require_file(const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw uif::Error(uif::ErrorKind::Io, std::string(what) + " '" + p.string() + "' not found");
}

struct SvrArgs {
    uif::SvrParams params;

    void attach(CLI::App* app) {
        app->add_option("--c", params.c, "SVR penalty C")->capture_default_str();
        app->add_option("--epsilon", params.epsilon, "SVR tube half-width")->capture_default_str();
        app->add_option("--gamma", params.gamma, "RBF kernel width")->capture_default_str();
        app->add_option("--tolerance", params.tolerance, "SMO stopping tolerance")->capture_default_str();
    }
};

// Extracts every record; failures are logged. Returns the indices that succeeded.
std::vector<std::size_t> extract_logged(const uif::DatasetManifest& m, unsigned jobs,
                                        std::vector<uif::FeatureVector>& out) {
    const auto res = uif::extract_all(m, jobs);
    std::vector<std::size_t> ok;
    out.clear();
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        if (res.features[i]) {
            ok.push_back(i);
            out.push_back(*res.features[i]);
        } else {
            log().warn("skipping '" + m.records[i].id + "': " + res.errors[i]);
        }
    }
    return ok;
}

// --- extract ----------------------------------------------------------------

struct ExtractCmd {
    std::string manifest;
    std::string out;
    unsigned jobs = 1;

    int run() const {
        require_file(manifest, "manifest");
        const auto m = uif::read_manifest(manifest);
        std::vector<uif::FeatureVector> features;
        const auto ok = extract_logged(m, jobs, features);
        const bool with_mos = m.has_labels();
        Output o(out);
        o.stream() << uif::feature_csv_header(with_mos) << '\n';
        for (std::size_t j = 0; j < ok.size(); ++j) {
            const auto& rec = m.records[ok[j]];
            uif::write_feature_row(o.stream(), rec.id, features[j], with_mos ? rec.mos : std::nullopt);
        }
        const std::size_t skipped = m.records.size() - ok.size();
        log().info("extracted " + std::to_string(ok.size()) + " of " + std::to_string(m.records.size()) + " pairs");
        return skipped ? kPartial : kOk;
    }
};

// --- train ------------------------------------------------------------------

struct TrainCmd {
    std::string manifest;
    std::string model;
    std::string mask = "all";
    unsigned jobs = 1;
    SvrArgs svr;

    int run() const {
        require_file(manifest, "manifest");
        const auto m = uif::read_manifest(manifest);
        if (!m.has_labels()) throw uif::Error(uif::ErrorKind::Usage, "train needs a mos value for every record");
        const auto fmask = uif::FeatureMask::parse(mask);
        fmask.validate();
        std::vector<uif::FeatureVector> features;
        const auto ok = extract_logged(m, jobs, features);
        if (ok.size() != m.records.size()) throw uif::Error(uif::ErrorKind::Format, "feature extraction failed");
        const auto labels = m.labels();
        const auto trained = uif::train_svr(features, labels, svr.params, fmask);
        uif::save_model(trained, model);

        std::vector<double> pred;
        for (const auto& f : features) pred.push_back(trained.predict(f));
        log().info("model written to '" + model + "' (" + std::to_string(trained.support_vectors.size()) +
                   " support vectors)");
        std::printf("training srcc %.4f plcc %.4f\n", uif::srcc(pred, labels), uif::plcc(pred, labels));
        return kOk;
    }
};

// --- score ------------------------------------------------------------------

struct ScoreCmd {
    std::string model;
    std::string original;
    std::string enhanced;

    int run() const {
        const auto trained = uif::load_model(model);
        const auto orig = uif::load_image(original);
        const auto enh = uif::load_image(enhanced);
        std::printf("%.4f\n", uif::predict(trained, orig, enh));
        return kOk;
    }
};

// --- evaluate ---------------------------------------------------------------

struct EvaluateCmd {
    std::string manifest;
    std::string mask = "all";
    std::string json;
    std::string save_models;
    int k = 4;
    std::uint64_t seed = 42;
    bool ablation = false;
    bool logistic = false;
    bool no_group = false;
    bool manifest_folds = false;
    unsigned jobs = 1;
    SvrArgs svr;

    int run() const {
        require_file(manifest, "manifest");
        auto m = uif::read_manifest(manifest);
        if (!m.has_labels()) throw uif::Error(uif::ErrorKind::Usage, "evaluate needs a mos value for every record");
        std::vector<uif::FeatureMask> masks;
        if (ablation) {
            for (int method = 1; method <= 7; ++method) masks.push_back(uif::FeatureMask::from_method(method));
        } else {
            masks.push_back(uif::FeatureMask::parse(mask));
            masks.back().validate();
        }
        if (manifest_folds) {
            if (!m.has_folds()) throw uif::Error(uif::ErrorKind::Usage, "--manifest-folds needs a fold column");
        } else {
            m = uif::kfold_split(std::move(m), k, seed, !no_group);
        }

        std::vector<uif::FeatureVector> features;
        const auto ok = extract_logged(m, jobs, features);
        uif::DatasetManifest used;
        for (auto i : ok) used.records.push_back(m.records[i]);
        const bool partial = ok.size() != m.records.size();

        std::vector<uif::EvalReport> reports;
        nlohmann::ordered_json doc;
        doc["seed"] = seed;
        doc["grouped"] = !no_group;
        doc["records"] = used.records.size();
        doc["skipped"] = m.records.size() - used.records.size();
        doc["reports"] = nlohmann::ordered_json::array();
        for (const auto& fm : masks) {
            const auto cv = uif::cross_validate(used, features, svr.params, fm, uif::CvOptions{logistic, jobs});
            for (const auto& w : cv.report.warnings) log().warn("method " + std::to_string(fm.method()) + ": " + w);
            if (!save_models.empty()) {
                fs::create_directories(save_models);
                for (std::size_t f = 0; f < cv.fold_models.size(); ++f) {
                    if (cv.fold_models[f].support_vectors.empty() && cv.fold_models[f].feature_names.empty()) continue;
                    const auto name = "method" + std::to_string(fm.method()) + "_fold" + std::to_string(f) + ".uifmodel";
                    uif::save_model(cv.fold_models[f], fs::path(save_models) / name);
                }
            }
            doc["reports"].push_back(uif::report_json(cv.report));
            reports.push_back(cv.report);
        }

        std::cout << uif::report_table(reports);
        const std::string text = doc.dump(2) + "\n";
        if (json.empty()) {
            std::cout << text;
        } else {
            Output o(json);
            o.stream() << text;
        }
        return partial ? kPartial : kOk;
    }
};

// --- mos --------------------------------------------------------------------

struct MosCmd {
    std::string ratings;
    std::string out;

    int run() const {
        require_file(ratings, "rating file");
        uif::RatingMatrix m;
        try {
            m = uif::read_ratings_csv(ratings);
        } catch (const uif::Error& e) {
            if (e.kind() == uif::ErrorKind::InsufficientData)
                throw uif::Error(uif::ErrorKind::Usage, "rating file '" + ratings + "' is empty");
            throw;
        }
        if (m.subjects() == 0) throw uif::Error(uif::ErrorKind::Usage, "rating file has no subject rows");

        const auto screened = uif::screen_ratings(m);
        for (auto s : screened.rejected_subjects) {
            const std::string id = s < m.subject_ids.size() ? m.subject_ids[s] : std::to_string(s);
            log().info("rejected subject " + id);
        }
        log().info(std::to_string(screened.outlier_ratings) + " outlier ratings");
        const auto agreement = uif::subject_agreement(screened.ratings);
        const auto table = uif::compute_mos(screened.ratings);
        {
            Output o(out);
            uif::write_mos_csv(o.stream(), table);
        }
        if (!out.empty()) {
            std::printf("mean ncc %.4f\nmean eud %.4f\n", agreement.mean_ncc, agreement.mean_eud);
            std::printf("rejected subjects:");
            for (auto s : screened.rejected_subjects)
                std::printf(" %s", s < m.subject_ids.size() ? m.subject_ids[s].c_str() : std::to_string(s).c_str());
            std::printf("\n");
        } else {
            log().info("mean ncc " + uif::csv::format_double(agreement.mean_ncc) + ", mean eud " +
                       uif::csv::format_double(agreement.mean_eud));
        }
        return kOk;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Underwater image enhancement quality: features, SVR training and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "uif 1.0");

    ExtractCmd extract;
    auto* c_extract = app.add_subcommand("extract", "Extract the 11 features for every manifest pair");
    c_extract->add_option("manifest", extract.manifest, "Manifest CSV (id,original,enhanced[,mos])")->required();
    c_extract->add_option("-o,--out", extract.out, "Output CSV (default: standard output)");
    c_extract->add_option("-j,--jobs", extract.jobs, "Worker threads")->check(CLI::PositiveNumber);

    TrainCmd train;
    auto* c_train = app.add_subcommand("train", "Train an SVR model on a labelled manifest");
    c_train->add_option("manifest", train.manifest, "Manifest CSV with a mos column")->required();
    c_train->add_option("-m,--model", train.model, "Output model file")->required();
    c_train->add_option("--mask", train.mask, "Feature groups: all, methodN, or names joined by +")
        ->capture_default_str();
    c_train->add_option("-j,--jobs", train.jobs, "Worker threads")->check(CLI::PositiveNumber);
    train.svr.attach(c_train);

    ScoreCmd score;
    auto* c_score = app.add_subcommand("score", "Score one enhanced image against its original");
    c_score->add_option("-m,--model", score.model, "Model file")->required();
    c_score->add_option("original", score.original, "Original image")->required();
    c_score->add_option("enhanced", score.enhanced, "Enhanced image")->required();

    EvaluateCmd evaluate;
    auto* c_eval = app.add_subcommand("evaluate", "k-fold cross-validated SRCC/PLCC");
    c_eval->add_option("manifest", evaluate.manifest, "Manifest CSV with a mos column")->required();
    c_eval->add_option("-k,--k", evaluate.k, "Number of folds")->capture_default_str();
    c_eval->add_option("--seed", evaluate.seed, "Fold shuffling seed")->capture_default_str();
    c_eval->add_option("--mask", evaluate.mask, "Feature groups: all, methodN, or names joined by +")
        ->capture_default_str();
    c_eval->add_flag("--ablation", evaluate.ablation, "Evaluate all seven feature-group methods");
    c_eval->add_flag("--logistic", evaluate.logistic, "Fit a 5-parameter logistic before PLCC");
    c_eval->add_flag("--no-group", evaluate.no_group, "Do not keep pairs of one original in the same fold");
    c_eval->add_flag("--manifest-folds", evaluate.manifest_folds, "Use the manifest's fold column");
    c_eval->add_option("--json", evaluate.json, "Write the JSON report here instead of standard output");
    c_eval->add_option("--save-models", evaluate.save_models, "Directory for per-fold model files");
    c_eval->add_option("-j,--jobs", evaluate.jobs, "Worker threads")->check(CLI::PositiveNumber);
    evaluate.svr.attach(c_eval);

    MosCmd mos;
    auto* c_mos = app.add_subcommand("mos", "Screen subjective ratings and compute MOS");
    c_mos->add_option("ratings", mos.ratings, "Rating CSV (subject rows, image columns)")->required();
    c_mos->add_option("-o,--out", mos.out, "Output MOS CSV (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*c_extract) return extract.run();
        if (*c_train) return train.run();
        if (*c_score) return score.run();
        if (*c_eval) return evaluate.run();
        if (*c_mos) return mos.run();
    } catch (const uif::Error& e) {
        log().error(e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        log().error(e.what());
        return kData;
    }
    return kUsage;
}
