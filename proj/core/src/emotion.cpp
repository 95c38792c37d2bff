#include "convocode/emotion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "convocode/csv.hpp"
#include "convocode/errors.hpp"

namespace convocode {

std::vector<PadScore> FixtureEmotionScorer::score_texts(const std::vector<std::string>& texts) {
    std::vector<PadScore> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        const auto it = table_.find(text);
        if (it != table_.end()) {
            out.push_back(it->second);
        } else if (fallback_) {
            out.push_back(*fallback_);
        } else {
            throw ContractError("fixture scorer has no entry for text \"" + text + "\"");
        }
    }
    return out;
}

namespace {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

std::vector<PadScore> HashEmotionScorer::score_texts(const std::vector<std::string>& texts) {
    std::vector<PadScore> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        // Stable pseudo-score in [1, 5] with two decimals.
        const double unit = static_cast<double>(fnv1a(text) % 401u) / 100.0;
        out.push_back(PadScore{1.0 + unit, std::nullopt, std::nullopt});
    }
    return out;
}

std::size_t content_length(const std::string& content) {
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return 0;
    const auto last = content.find_last_not_of(" \t\r\n");
    std::size_t code_points = 0;
    for (std::size_t i = first; i <= last; ++i) {
        if ((static_cast<unsigned char>(content[i]) & 0xC0) != 0x80) ++code_points;
    }
    return code_points;
}

std::vector<Utterance> filter_scorable(const std::vector<Utterance>& utterances,
                                       int min_content_chars) {
    std::vector<Utterance> out;
    for (const auto& u : utterances) {
        if (content_length(u.content) >= static_cast<std::size_t>(std::max(min_content_chars, 0)))
            out.push_back(u);
    }
    return out;
}

std::vector<SentenceEmotion> score_sentences(const std::vector<Utterance>& utterances,
                                             EmotionScorer& scorer) {
    std::vector<std::string> texts;
    texts.reserve(utterances.size());
    for (const auto& u : utterances) texts.push_back(u.content);

    const auto scores = scorer.score_texts(texts);
    if (scores.size() != utterances.size())
        throw ContractError("emotion scorer returned " + std::to_string(scores.size()) +
                            " scores for " + std::to_string(utterances.size()) + " utterances");

    std::vector<SentenceEmotion> out;
    out.reserve(utterances.size());
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        SentenceEmotion e;
        e.utterance_id = utterances[i].id;
        e.time_ms = (utterances[i].start_ms + utterances[i].end_ms) / 2;
        e.pleasure = scores[i].pleasure;
        e.arousal = scores[i].arousal;
        e.dominance = scores[i].dominance;
        out.push_back(e);
    }
    return out;
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

BinnedSeries bin_series(const std::vector<SentenceEmotion>& scores, std::int64_t bin_width_ms,
                        std::string session_id) {
    if (bin_width_ms <= 0) throw DomainError("bin_series: bin_width_ms must be positive");

    std::map<std::int64_t, std::pair<double, std::size_t>> bins;  // index -> (sum, count)
    for (const auto& s : scores) {
        auto& [sum, count] = bins[floor_div(s.time_ms, bin_width_ms)];
        sum += s.pleasure;
        ++count;
    }

    BinnedSeries series;
    series.bin_width_ms = bin_width_ms;
    series.session_id = std::move(session_id);
    for (const auto& [index, agg] : bins)
        series.values.push_back({index, agg.first / static_cast<double>(agg.second), agg.second});
    return series;
}

std::vector<SentenceEmotion> window_first(std::vector<SentenceEmotion> scores,
                                          std::int64_t duration_ms) {
    std::erase_if(scores, [duration_ms](const SentenceEmotion& s) {
        return s.time_ms >= duration_ms;
    });
    return scores;
}

BinnedSeries window_first(BinnedSeries series, std::int64_t duration_ms) {
    std::erase_if(series.values, [&](const BinPoint& p) {
        return p.bin_index * series.bin_width_ms >= duration_ms;
    });
    return series;
}

std::vector<TimeValue> loess_smooth(const std::vector<TimeValue>& points,
                                    const SmoothConfig& config) {
    const std::size_t n = points.size();
    if (n < 2) throw DomainError("loess_smooth: need at least 2 points");
    if (!(config.frac > 0.0) || config.frac > 1.0)
        throw DomainError("loess_smooth: frac must be in (0, 1]");
    if (config.degree != 1) throw DomainError("loess_smooth: only degree 1 is supported");

    // Canonical order makes the result independent of input permutation.
    std::vector<TimeValue> sorted = points;
    std::stable_sort(sorted.begin(), sorted.end(), [](const TimeValue& a, const TimeValue& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.value < b.value;
    });

    const std::size_t q =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(config.frac * static_cast<double>(n))),
                                2, n);

    std::vector<TimeValue> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = sorted[i].t;

        // Symmetric window growth: take the nearer neighbour first,
        // preferring the left side on exact distance ties.
        std::size_t lo = i, hi = i;
        while (hi - lo + 1 < q) {
            const double d_left = lo > 0 ? x0 - sorted[lo - 1].t
                                         : std::numeric_limits<double>::infinity();
            const double d_right = hi + 1 < n ? sorted[hi + 1].t - x0
                                              : std::numeric_limits<double>::infinity();
            if (d_left <= d_right) {
                --lo;
            } else {
                ++hi;
            }
        }
        const double h = std::max(x0 - sorted[lo].t, sorted[hi].t - x0);

        double sw = 0.0, swx = 0.0, swy = 0.0;
        std::vector<double> weights(hi - lo + 1, 1.0);
        if (h > 0.0) {
            for (std::size_t k = lo; k <= hi; ++k) {
                const double u = std::fabs(sorted[k].t - x0) / h;
                const double c = 1.0 - u * u * u;
                weights[k - lo] = u < 1.0 ? c * c * c : 0.0;
            }
        }
        for (std::size_t k = lo; k <= hi; ++k) {
            const double w = weights[k - lo];
            sw += w;
            swx += w * sorted[k].t;
            swy += w * sorted[k].value;
        }
        const double mx = swx / sw;
        const double my = swy / sw;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) {
            const double w = weights[k - lo];
            const double dx = sorted[k].t - mx;
            sxx += w * dx * dx;
            sxy += w * dx * (sorted[k].value - my);
        }

        double smoothed = my;
        if (h > 0.0 && sxx > 1e-12 * sw * h * h) smoothed = my + (sxy / sxx) * (x0 - mx);
        out.push_back({x0, smoothed});
    }
    return out;
}

BandSeries band_across_sessions(const std::vector<std::vector<TimeValue>>& session_curves,
                                const std::vector<double>& grid) {
    // Each curve must be sorted by t for interpolation.
    std::vector<std::vector<TimeValue>> curves = session_curves;
    for (auto& curve : curves)
        std::stable_sort(curve.begin(), curve.end(),
                         [](const TimeValue& a, const TimeValue& b) { return a.t < b.t; });

    BandSeries band;
    for (const double g : grid) {
        std::vector<double> values;
        for (const auto& curve : curves) {
            if (curve.empty() || g < curve.front().t || g > curve.back().t) continue;
            const auto upper = std::lower_bound(
                curve.begin(), curve.end(), g,
                [](const TimeValue& p, double t) { return p.t < t; });
            double v;
            if (upper == curve.begin()) {
                v = upper->value;
            } else if (upper == curve.end()) {
                v = curve.back().value;
            } else {
                const auto lower = std::prev(upper);
                const double span = upper->t - lower->t;
                v = span > 0.0
                        ? lower->value + (upper->value - lower->value) * (g - lower->t) / span
                        : lower->value;
            }
            values.push_back(v);
        }
        if (values.empty()) continue;

        BandPoint point;
        point.t = g;
        point.n_sessions = values.size();
        point.mean = std::accumulate(values.begin(), values.end(), 0.0) /
                     static_cast<double>(values.size());
        if (values.size() >= 2) {
            double ss = 0.0;
            for (const double v : values) ss += (v - point.mean) * (v - point.mean);
            const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
            point.standard_error = sd / std::sqrt(static_cast<double>(values.size()));
        }
        band.push_back(point);
    }
    return band;
}

// --- persistence -------------------------------------------------------------

namespace {

std::string format_double(double v) {
    std::ostringstream oss;
    oss.precision(12);
    oss << v;
    return oss.str();
}

}  // namespace

void store_scores(const std::vector<SentenceEmotion>& scores, const std::filesystem::path& path) {
    bool has_ad = std::any_of(scores.begin(), scores.end(), [](const SentenceEmotion& s) {
        return s.arousal.has_value() || s.dominance.has_value();
    });
    std::vector<csv::Row> rows;
    csv::Row header = {"utterance_id", "time_ms", "pleasure"};
    if (has_ad) {
        header.push_back("arousal");
        header.push_back("dominance");
    }
    rows.push_back(header);
    for (const auto& s : scores) {
        csv::Row row = {std::to_string(s.utterance_id), std::to_string(s.time_ms),
                        format_double(s.pleasure)};
        if (has_ad) {
            row.push_back(s.arousal ? format_double(*s.arousal) : "");
            row.push_back(s.dominance ? format_double(*s.dominance) : "");
        }
        rows.push_back(std::move(row));
    }
    csv::write_file(path, rows);
}

std::vector<SentenceEmotion> load_scores(const std::filesystem::path& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw ParseError(path.string() + ": empty scores file");
    const auto& header = rows.front();
    if (header.size() < 3 || header[0] != "utterance_id" || header[1] != "time_ms" ||
        header[2] != "pleasure")
        throw ParseError(path.string() + ": expected header utterance_id,time_ms,pleasure");

    std::vector<SentenceEmotion> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() < 3)
            throw ParseError(path.string() + ": row " + std::to_string(r + 1) + " is short");
        SentenceEmotion s;
        s.utterance_id = std::stoi(row[0]);
        s.time_ms = std::stoll(row[1]);
        s.pleasure = std::stod(row[2]);
        if (row.size() >= 4 && !row[3].empty()) s.arousal = std::stod(row[3]);
        if (row.size() >= 5 && !row[4].empty()) s.dominance = std::stod(row[4]);
        out.push_back(s);
    }
    return out;
}

}  // namespace convocode
