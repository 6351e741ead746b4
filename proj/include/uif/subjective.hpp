#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "uif/csv.hpp"
#include "uif/error.hpp"

namespace uif {

/// subjects x images raw opinion scores on the 1..5 scale with a validity mask.
class RatingMatrix {
public:
    RatingMatrix() = default;
    RatingMatrix(std::size_t subjects, std::size_t images)
        : subjects_(subjects), images_(images), scores_(subjects * images, 0.0), valid_(subjects * images, 0) {}

    std::size_t subjects() const noexcept { return subjects_; }
    std::size_t images() const noexcept { return images_; }

    double score(std::size_t s, std::size_t i) const { return scores_[s * images_ + i]; }
    bool valid(std::size_t s, std::size_t i) const { return valid_[s * images_ + i] != 0; }

    void set(std::size_t s, std::size_t i, double score) {
        if (!(score >= 1.0 && score <= 5.0)) throw Error(ErrorKind::Format, "rating outside the 1..5 scale");
        scores_[s * images_ + i] = score;
        valid_[s * images_ + i] = 1;
    }
    void invalidate(std::size_t s, std::size_t i) { valid_[s * images_ + i] = 0; }

    std::size_t valid_count_for_subject(std::size_t s) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < images_; ++i) n += valid(s, i) ? 1 : 0;
        return n;
    }

    std::vector<std::string> subject_ids;
    std::vector<std::string> image_ids;

    friend bool operator==(const RatingMatrix&, const RatingMatrix&) = default;

private:
    std::size_t subjects_ = 0;
    std::size_t images_ = 0;
    std::vector<double> scores_;
    std::vector<std::uint8_t> valid_;
};

/// Normalized cross correlation on raw (uncentred) vectors.
inline double ncc(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::Shape, "ncc: vectors differ in length or are empty");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) throw Error(ErrorKind::DegenerateInput, "ncc: zero vector");
    return ab / std::sqrt(aa * bb);
}

/// Scores mapped from 1..5 onto 0..1, Euclidean distance divided by sqrt(n).
inline double eud(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::Shape, "eud: vectors differ in length or are empty");
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = (a[i] - 1.0) / 4.0 - (b[i] - 1.0) / 4.0;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(a.size()));
}

struct ScreeningResult {
    RatingMatrix ratings;
    std::vector<std::size_t> rejected_subjects;
    std::size_t outlier_ratings = 0;
};

/// Per-image screen: a rating is an outlier when it lies more than 2 s from
/// the image mean (kurtosis in [2, 4]) or more than sqrt(20) s otherwise, s
/// being the sample standard deviation. Subjects with more than 5% outliers
/// lose all of their ratings.
inline ScreeningResult screen_ratings(const RatingMatrix& input) {
    ScreeningResult res{input, {}, 0};
    RatingMatrix& out = res.ratings;
    const std::size_t ns = input.subjects();
    std::vector<std::size_t> outliers(ns, 0);

    for (std::size_t i = 0; i < input.images(); ++i) {
        std::size_t n = 0;
        double mean = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            if (!input.valid(s, i)) continue;
            ++n;
            mean += input.score(s, i);
        }
        if (n < 2) continue;
        mean /= static_cast<double>(n);
        double m2 = 0.0, m4 = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            if (!input.valid(s, i)) continue;
            const double d = input.score(s, i) - mean;
            m2 += d * d;
            m4 += d * d * d * d;
        }
        if (m2 == 0.0) continue;
        const double sd = std::sqrt(m2 / static_cast<double>(n - 1));
        m2 /= static_cast<double>(n);
        m4 /= static_cast<double>(n);
        const double kurtosis = m4 / (m2 * m2);
        const double k = (kurtosis >= 2.0 && kurtosis <= 4.0) ? 2.0 : std::sqrt(20.0);
        for (std::size_t s = 0; s < ns; ++s) {
            if (!input.valid(s, i)) continue;
            if (std::abs(input.score(s, i) - mean) > k * sd) {
                out.invalidate(s, i);
                ++outliers[s];
                ++res.outlier_ratings;
            }
        }
    }

    for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t rated = input.valid_count_for_subject(s);
        if (rated == 0) continue;
        if (static_cast<double>(outliers[s]) / static_cast<double>(rated) > 0.05) {
            res.rejected_subjects.push_back(s);
            for (std::size_t i = 0; i < input.images(); ++i) out.invalidate(s, i);
        }
    }
    return res;
}

inline RatingMatrix reject_outliers(const RatingMatrix& ratings) { return screen_ratings(ratings).ratings; }

struct MosTable {
    std::vector<std::string> image_ids;
    std::vector<double> mos;
    std::vector<std::size_t> n_valid;
};

inline constexpr double kMosCentre = 50.0;
inline constexpr double kMosSpread = 15.0;

/// Per-subject z-scores over valid ratings, rescaled to mean 50 / sd 15, then
/// averaged per image. A subject with zero spread contributes z = 0.
inline MosTable compute_mos(const RatingMatrix& ratings) {
    const std::size_t ns = ratings.subjects();
    const std::size_t ni = ratings.images();
    std::vector<double> mu(ns, 0.0), sd(ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t n = ratings.valid_count_for_subject(s);
        if (n == 0) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < ni; ++i) {
            if (ratings.valid(s, i)) sum += ratings.score(s, i);
        }
        mu[s] = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < ni; ++i) {
            if (ratings.valid(s, i)) ss += (ratings.score(s, i) - mu[s]) * (ratings.score(s, i) - mu[s]);
        }
        sd[s] = std::sqrt(ss / static_cast<double>(n));
    }

    MosTable table;
    table.image_ids = ratings.image_ids;
    if (table.image_ids.size() != ni) {
        table.image_ids.clear();
        for (std::size_t i = 0; i < ni; ++i) table.image_ids.push_back(std::to_string(i));
    }
    for (std::size_t i = 0; i < ni; ++i) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t s = 0; s < ns; ++s) {
            if (!ratings.valid(s, i)) continue;
            const double z = sd[s] > 0.0 ? (ratings.score(s, i) - mu[s]) / sd[s] : 0.0;
            sum += kMosCentre + kMosSpread * z;
            ++n;
        }
        if (n == 0) throw Error(ErrorKind::AllInvalid, "image '" + table.image_ids[i] + "' has no valid ratings");
        table.mos.push_back(sum / static_cast<double>(n));
        table.n_valid.push_back(n);
    }
    return table;
}

struct Agreement {
    double mean_ncc = 0.0;
    double mean_eud = 0.0;
    std::size_t pairs = 0;
};

/// Mean NCC / EUD over subject pairs, each pair compared on the images both
/// rated validly. Pairs with no common image are skipped.
inline Agreement subject_agreement(const RatingMatrix& ratings) {
    Agreement ag;
    std::vector<double> a, b;
    for (std::size_t s = 0; s < ratings.subjects(); ++s) {
        for (std::size_t t = s + 1; t < ratings.subjects(); ++t) {
            a.clear();
            b.clear();
            for (std::size_t i = 0; i < ratings.images(); ++i) {
                if (ratings.valid(s, i) && ratings.valid(t, i)) {
                    a.push_back(ratings.score(s, i));
                    b.push_back(ratings.score(t, i));
                }
            }
            if (a.empty()) continue;
            ag.mean_ncc += ncc(a, b);
            ag.mean_eud += eud(a, b);
            ++ag.pairs;
        }
    }
    if (ag.pairs > 0) {
        ag.mean_ncc /= static_cast<double>(ag.pairs);
        ag.mean_eud /= static_cast<double>(ag.pairs);
    }
    return ag;
}

/// Rating CSV: header "<label>,<image id>,...", then one row per subject
/// "<subject id>,<score>,..."; a blank cell is a missing rating.
inline RatingMatrix read_ratings_csv(const std::filesystem::path& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw Error(ErrorKind::InsufficientData, "rating CSV is empty");
    const auto& header = rows.front();
    if (header.size() < 2) throw Error(ErrorKind::Format, "rating CSV header needs at least one image column");
    RatingMatrix m(rows.size() - 1, header.size() - 1);
    m.image_ids.assign(header.begin() + 1, header.end());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() > header.size()) throw Error(ErrorKind::Format, "rating row " + std::to_string(r) + " too long");
        m.subject_ids.push_back(row.front());
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c].empty()) continue;
            const auto v = csv::parse_double(row[c]);
            if (!v) throw Error(ErrorKind::Format, "bad rating '" + row[c] + "'");
            m.set(r - 1, c - 1, *v);
        }
    }
    return m;
}

inline void write_ratings_csv(std::ostream& out, const RatingMatrix& m) {
    out << "subject";
    for (std::size_t i = 0; i < m.images(); ++i)
        out << ',' << csv::quote(i < m.image_ids.size() ? m.image_ids[i] : std::to_string(i));
    out << '\n';
    for (std::size_t s = 0; s < m.subjects(); ++s) {
        out << csv::quote(s < m.subject_ids.size() ? m.subject_ids[s] : "s" + std::to_string(s));
        for (std::size_t i = 0; i < m.images(); ++i) {
            out << ',';
            if (m.valid(s, i)) out << csv::format_double(m.score(s, i));
        }
        out << '\n';
    }
}

inline void write_mos_csv(std::ostream& out, const MosTable& t) {
    out << "image_id,mos,n_valid\n";
    for (std::size_t i = 0; i < t.mos.size(); ++i) {
        out << csv::quote(t.image_ids[i]) << ',' << csv::format_double(t.mos[i]) << ',' << t.n_valid[i] << '\n';
    }
}

}  // namespace uif
