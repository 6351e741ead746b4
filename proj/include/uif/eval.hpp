#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "uif/correlation.hpp"
#include "uif/csv.hpp"
#include "uif/error.hpp"
#include "uif/features.hpp"
#include "uif/image.hpp"
#include "uif/svr.hpp"

namespace uif {

struct ManifestRecord {
    std::string id;
    std::filesystem::path original;
    std::filesystem::path enhanced;
    std::optional<double> mos;
    std::optional<int> fold;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;

    bool has_labels() const {
        return !records.empty() &&
               std::all_of(records.begin(), records.end(), [](const auto& r) { return r.mos.has_value(); });
    }
    bool has_folds() const {
        return !records.empty() &&
               std::all_of(records.begin(), records.end(), [](const auto& r) { return r.fold.has_value(); });
    }
    std::vector<double> labels() const {
        std::vector<double> y;
        for (const auto& r : records) {
            if (!r.mos) throw Error(ErrorKind::Usage, "record '" + r.id + "' has no mos");
            y.push_back(*r.mos);
        }
        return y;
    }
};

/// Manifest CSV with header "id,original,enhanced[,mos][,fold]" (columns
/// located by name). Relative image paths resolve against the manifest's
/// directory. Missing `mos` column is allowed; callers that need labels check
/// has_labels().
inline DatasetManifest read_manifest(const std::filesystem::path& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw Error(ErrorKind::Usage, "manifest is empty (no header)");
    const auto& header = rows.front();
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto c_id = column("id");
    const auto c_orig = column("original");
    const auto c_enh = column("enhanced");
    const auto c_mos = column("mos");
    const auto c_fold = column("fold");
    if (!c_id || !c_orig || !c_enh) throw Error(ErrorKind::Usage, "manifest header must contain id,original,enhanced");

    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    DatasetManifest m;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto cell = [&](std::size_t c) -> std::string { return c < row.size() ? row[c] : std::string(); };
        ManifestRecord rec;
        rec.id = cell(*c_id);
        rec.original = resolve(cell(*c_orig));
        rec.enhanced = resolve(cell(*c_enh));
        if (rec.id.empty()) throw Error(ErrorKind::Format, "manifest row " + std::to_string(r) + " has no id");
        if (c_mos && !cell(*c_mos).empty()) {
            const auto v = csv::parse_double(cell(*c_mos));
            if (!v || !std::isfinite(*v)) throw Error(ErrorKind::Format, "bad mos in row " + std::to_string(r));
            rec.mos = *v;
        }
        if (c_fold && !cell(*c_fold).empty()) {
            const auto v = csv::parse_int(cell(*c_fold));
            if (!v || *v < 0) throw Error(ErrorKind::Format, "bad fold in row " + std::to_string(r));
            rec.fold = static_cast<int>(*v);
        }
        m.records.push_back(std::move(rec));
    }
    return m;
}

inline void write_manifest(std::ostream& out, const DatasetManifest& m) {
    const bool labels = m.has_labels();
    const bool folds = m.has_folds();
    out << "id,original,enhanced" << (labels ? ",mos" : "") << (folds ? ",fold" : "") << '\n';
    for (const auto& r : m.records) {
        out << csv::quote(r.id) << ',' << csv::quote(r.original.string()) << ',' << csv::quote(r.enhanced.string());
        if (labels) out << ',' << csv::format_double(*r.mos);
        if (folds) out << ',' << *r.fold;
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Fold assignment

namespace detail {

// Unbiased draw in [0, n) from the raw 64-bit engine output, so the sequence
// does not depend on the standard library's distribution implementation.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = 0;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

}  // namespace detail

/// Seeded Fisher-Yates shuffle of the groups, then round-robin assignment.
/// With group_by_original every record sharing an original image path lands
/// in the same fold.
inline DatasetManifest kfold_split(DatasetManifest manifest, int k, std::uint64_t seed,
                                   bool group_by_original = true) {
    if (k < 2) throw Error(ErrorKind::Usage, "k must be at least 2");
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const std::string key =
            group_by_original ? manifest.records[i].original.lexically_normal().string() : std::to_string(i);
        auto [it, inserted] = group_of.emplace(key, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    if (groups.size() < static_cast<std::size_t>(k))
        throw Error(ErrorKind::InsufficientData, "fewer groups than folds");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[detail::uniform_below(rng, i)]);
    }
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        for (auto rec : groups[order[pos]]) manifest.records[rec].fold = static_cast<int>(pos % static_cast<std::size_t>(k));
    }
    return manifest;
}

// ---------------------------------------------------------------------------
// Batch extraction

struct ExtractionResult {
    std::vector<std::optional<FeatureVector>> features;
    std::vector<std::string> errors;  // empty string on success
};

inline FeatureVector extract_record(const ManifestRecord& rec) {
    const auto orig = load_image(rec.original);
    const auto enh = load_image(rec.enhanced);
    return extract_features(orig, enh);
}

/// Extracts features for every record with `jobs` workers. Result order
/// follows manifest order; failures are reported per record.
inline ExtractionResult extract_all(const DatasetManifest& manifest, unsigned jobs = 1,
                                    const std::function<FeatureVector(const ManifestRecord&)>& extractor = extract_record) {
    const std::size_t n = manifest.records.size();
    ExtractionResult res{std::vector<std::optional<FeatureVector>>(n), std::vector<std::string>(n)};
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                res.features[i] = extractor(manifest.records[i]);
            } catch (const std::exception& e) {
                res.errors[i] = e.what();
            }
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct FoldReport {
    int fold = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    bool defined = false;
    double srcc = 0.0;
    double plcc = 0.0;
};

struct EvalReport {
    FeatureMask mask = FeatureMask::all();
    SvrParams params;
    int k = 0;
    bool logistic = false;
    std::vector<FoldReport> folds;
    std::size_t n_pooled = 0;
    double srcc = 0.0;
    double plcc = 0.0;
    std::vector<std::string> warnings;
};

struct CrossValidation {
    EvalReport report;
    std::vector<SvrModel> fold_models;
    std::vector<double> predictions;  // held-out prediction per record
};

struct CvOptions {
    bool logistic = false;
    unsigned jobs = 1;
};

inline double correlation_plcc(std::span<const double> pred, std::span<const double> truth, bool logistic) {
    if (!logistic) return plcc(pred, truth);
    const auto f = fit_logistic5(pred, truth);
    std::vector<double> mapped(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) mapped[i] = f(pred[i]);
    return plcc(mapped, truth);
}

/// Trains one model per fold on the remaining folds (scaler included) and
/// scores the held-out fold. Aggregates are computed on the pooled held-out
/// predictions of every defined fold.
inline CrossValidation cross_validate(const DatasetManifest& manifest, std::span<const FeatureVector> features,
                                      const SvrParams& params, FeatureMask mask, const CvOptions& options = {}) {
    mask.validate();
    if (!manifest.has_folds()) throw Error(ErrorKind::Usage, "manifest has no fold assignment");
    if (features.size() != manifest.records.size()) throw Error(ErrorKind::Shape, "feature count != record count");
    const auto labels = manifest.labels();

    int k = 0;
    for (const auto& r : manifest.records) k = std::max(k, *r.fold + 1);
    if (k < 2) throw Error(ErrorKind::Usage, "cross-validation needs at least two folds");

    CrossValidation cv;
    cv.report.mask = mask;
    cv.report.params = params;
    cv.report.k = k;
    cv.report.logistic = options.logistic;
    cv.fold_models.resize(static_cast<std::size_t>(k));
    cv.predictions.assign(labels.size(), 0.0);
    cv.report.folds.resize(static_cast<std::size_t>(k));

    auto run_fold = [&](int f) {
        std::vector<FeatureVector> train_x;
        std::vector<double> train_y;
        std::vector<std::size_t> test_idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (*manifest.records[i].fold == f) {
                test_idx.push_back(i);
            } else {
                train_x.push_back(features[i]);
                train_y.push_back(labels[i]);
            }
        }
        auto& fr = cv.report.folds[static_cast<std::size_t>(f)];
        fr.fold = f;
        fr.n_train = train_x.size();
        fr.n_test = test_idx.size();
        if (test_idx.empty() || train_x.size() < 2) return;
        auto model = train_svr(train_x, train_y, params, mask);
        for (auto i : test_idx) cv.predictions[i] = model.predict(features[i]);
        cv.fold_models[static_cast<std::size_t>(f)] = std::move(model);
    };

    if (options.jobs > 1) {
        std::vector<std::future<void>> pending;
        for (int f = 0; f < k; ++f) pending.push_back(std::async(std::launch::async, run_fold, f));
        for (auto& p : pending) p.get();
    } else {
        for (int f = 0; f < k; ++f) run_fold(f);
    }

    std::vector<double> pooled_pred, pooled_truth;
    for (int f = 0; f < k; ++f) {
        auto& fr = cv.report.folds[static_cast<std::size_t>(f)];
        std::vector<double> p, t;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (*manifest.records[i].fold != f) continue;
            p.push_back(cv.predictions[i]);
            t.push_back(labels[i]);
        }
        if (fr.n_train < 2 || p.empty()) {
            cv.report.warnings.push_back("fold " + std::to_string(f) + " has too few records; excluded");
            continue;
        }
        if (p.size() < 2 || detail::is_constant(t)) {
            cv.report.warnings.push_back("fold " + std::to_string(f) + " has constant truth; excluded");
            continue;
        }
        pooled_pred.insert(pooled_pred.end(), p.begin(), p.end());
        pooled_truth.insert(pooled_truth.end(), t.begin(), t.end());
        if (detail::is_constant(p)) {
            cv.report.warnings.push_back("fold " + std::to_string(f) + " has constant predictions; correlation undefined");
            continue;
        }
        fr.defined = true;
        fr.srcc = srcc(p, t);
        fr.plcc = correlation_plcc(p, t, options.logistic);
    }
    cv.report.n_pooled = pooled_pred.size();
    if (pooled_pred.size() < 2 || detail::is_constant(pooled_pred) || detail::is_constant(pooled_truth)) {
        cv.report.warnings.push_back("pooled correlations undefined");
    } else {
        cv.report.srcc = srcc(pooled_pred, pooled_truth);
        cv.report.plcc = correlation_plcc(pooled_pred, pooled_truth, options.logistic);
    }
    return cv;
}

// ---------------------------------------------------------------------------
// Reporting

inline nlohmann::ordered_json report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["method"] = r.mask.method();
    j["features"] = r.mask.label();
    j["hyperparams"] = {{"c", r.params.c}, {"epsilon", r.params.epsilon}, {"gamma", r.params.gamma},
                        {"tolerance", r.params.tolerance}};
    j["k"] = r.k;
    j["plcc_mapping"] = r.logistic ? "logistic5" : "none";
    j["folds"] = nlohmann::ordered_json::array();
    for (const auto& f : r.folds) {
        nlohmann::ordered_json fj{{"fold", f.fold}, {"n_train", f.n_train}, {"n_test", f.n_test},
                                  {"defined", f.defined}};
        if (f.defined) {
            fj["srcc"] = f.srcc;
            fj["plcc"] = f.plcc;
        } else {
            fj["srcc"] = nullptr;
            fj["plcc"] = nullptr;
        }
        j["folds"].push_back(fj);
    }
    j["pooled"] = {{"n", r.n_pooled}, {"srcc", r.srcc}, {"plcc", r.plcc}};
    j["warnings"] = r.warnings;
    return j;
}

inline std::string report_table(std::span<const EvalReport> reports) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s  %-34s  %7s  %7s\n", "Method", "Feature groups", "SRCC", "PLCC");
    out << buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%-8d  %-34s  %7.3f  %7.3f\n", r.mask.method(), r.mask.label().c_str(), r.srcc,
                      r.plcc);
        out << buf;
        for (const auto& f : r.folds) {
            if (f.defined) {
                std::snprintf(buf, sizeof buf, "  fold %d (n=%zu)%*s  %7.3f  %7.3f\n", f.fold, f.n_test, 24, "", f.srcc,
                              f.plcc);
            } else {
                std::snprintf(buf, sizeof buf, "  fold %d (n=%zu)%*s  %7s  %7s\n", f.fold, f.n_test, 24, "", "n/a",
                              "n/a");
            }
            out << buf;
        }
    }
    return out.str();
}

}  // namespace uif
