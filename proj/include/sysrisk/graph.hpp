#pragma once

#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "sysrisk/errors.hpp"
#include "sysrisk/model.hpp"
#include "sysrisk/rng.hpp"

namespace sysrisk {

/// One sampled liability network plus all per-bank draws.
///
/// Out-edges of small bank j split the (1 - eta_sb[j]) fraction equally over
/// its sampled neighbours, so the j-th row is fully described by the
/// neighbour list and one weight. Rows are stored compressed (CSR) which
/// keeps every solver pass O(edges) at any n.
class NetworkRealization {
public:
    /// Builds a realization from explicit draws. Indicator rows are given as
    /// adjacency lists (sorted, no self-loops).
    [[nodiscard]] static NetworkRealization from_draws(std::vector<std::vector<std::uint32_t>> neighbors,
                                                       std::vector<double> eta_sb,
                                                       std::vector<double> eta_bs,
                                                       std::vector<double> shocks,
                                                       std::vector<double> k,
                                                       std::vector<double> y,
                                                       std::uint64_t seed = 0,
                                                       long resamples = 0) {
        NetworkRealization net;
        net.n_ = static_cast<long>(neighbors.size());
        const auto n = static_cast<std::size_t>(net.n_);
        if (eta_sb.size() != n || eta_bs.size() != n || shocks.size() != n || k.size() != n || y.size() != n)
            throw Error(ErrorCode::DimensionMismatch, "draw vectors must all have length n");
        net.eta_sb_ = std::move(eta_sb);
        net.eta_bs_ = std::move(eta_bs);
        net.shocks_ = std::move(shocks);
        net.k_ = std::move(k);
        net.y_ = std::move(y);
        net.seed_ = seed;
        net.resamples_ = resamples;

        net.row_offset_.assign(n + 1, 0);
        for (std::size_t j = 0; j < n; ++j) {
            if (neighbors[j].empty())
                throw Error(ErrorCode::IsolatedRow, "row " + std::to_string(j) + " has no out-edges");
            net.row_offset_[j + 1] = net.row_offset_[j] + neighbors[j].size();
        }
        net.col_index_.reserve(net.row_offset_[n]);
        for (const auto& row : neighbors)
            net.col_index_.insert(net.col_index_.end(), row.begin(), row.end());

        net.row_weight_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto deg = static_cast<double>(neighbors[j].size());
            net.row_weight_[j] = (1.0 - net.eta_sb_[j]) / deg;
        }

        net.eta_bar_ = std::accumulate(net.eta_bs_.begin(), net.eta_bs_.end(), 0.0);
        if (net.eta_bar_ <= 0.0)
            throw Error(ErrorCode::ZeroEtaBar, "all eta_bs draws are zero");
        net.weight_bs_.resize(n);
        for (std::size_t j = 0; j < n; ++j) net.weight_bs_[j] = net.eta_bs_[j] / net.eta_bar_;
        return net;
    }

    [[nodiscard]] long n() const noexcept { return n_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] long resamples() const noexcept { return resamples_; }
    [[nodiscard]] double eta_bar() const noexcept { return eta_bar_; }
    [[nodiscard]] std::size_t edge_count() const noexcept { return col_index_.size(); }

    [[nodiscard]] const std::vector<double>& eta_sb_draws() const noexcept { return eta_sb_; }
    [[nodiscard]] const std::vector<double>& eta_bs_draws() const noexcept { return eta_bs_; }
    [[nodiscard]] const std::vector<double>& shock_draws() const noexcept { return shocks_; }
    [[nodiscard]] const std::vector<double>& k_draws() const noexcept { return k_; }
    [[nodiscard]] const std::vector<double>& y_draws() const noexcept { return y_; }

    /// W_{j,b}: fraction of small bank j's liability owed to the big bank.
    [[nodiscard]] double weight_sb(std::size_t j) const noexcept { return eta_sb_[j]; }
    /// W_{b,j}: fraction of the big bank's liability owed to small bank j.
    [[nodiscard]] double weight_bs(std::size_t j) const noexcept { return weight_bs_[j]; }
    /// Common value of W_{j,i} over the neighbours i of row j.
    [[nodiscard]] double row_weight(std::size_t j) const noexcept { return row_weight_[j]; }

    [[nodiscard]] std::size_t out_degree(std::size_t j) const noexcept {
        return row_offset_[j + 1] - row_offset_[j];
    }

    template <class F>
    void for_each_neighbor(std::size_t j, F&& f) const {
        for (std::size_t e = row_offset_[j]; e < row_offset_[j + 1]; ++e) f(col_index_[e]);
    }

    /// W_{j,i}, zero when the edge is absent.
    [[nodiscard]] double weight_ss(std::size_t j, std::size_t i) const noexcept {
        for (std::size_t e = row_offset_[j]; e < row_offset_[j + 1]; ++e)
            if (col_index_[e] == i) return row_weight_[j];
        return 0.0;
    }

    [[nodiscard]] double row_sum_ss(std::size_t j) const noexcept {
        return row_weight_[j] * static_cast<double>(out_degree(j));
    }

    /// In-aggregate pass: out[i] = sum_j x[j] * W_{j,i}.
    void accumulate_in_aggregates(const std::vector<double>& x, std::vector<double>& out) const {
        out.assign(static_cast<std::size_t>(n_), 0.0);
        for (std::size_t j = 0; j < static_cast<std::size_t>(n_); ++j) {
            const double xw = x[j] * row_weight_[j];
            if (xw == 0.0) continue;
            for (std::size_t e = row_offset_[j]; e < row_offset_[j + 1]; ++e) out[col_index_[e]] += xw;
        }
    }

    /// (1/n) sum_j x[j] * W_{j,b}.
    [[nodiscard]] double big_aggregate(const std::vector<double>& x) const noexcept {
        double acc = 0.0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(n_); ++j) acc += x[j] * eta_sb_[j];
        return acc / static_cast<double>(n_);
    }

private:
    long n_ = 0;
    std::vector<std::size_t> row_offset_;
    std::vector<std::uint32_t> col_index_;
    std::vector<double> row_weight_;
    std::vector<double> eta_sb_;
    std::vector<double> eta_bs_;
    std::vector<double> weight_bs_;
    std::vector<double> shocks_;
    std::vector<double> k_;
    std::vector<double> y_;
    double eta_bar_ = 0.0;
    std::uint64_t seed_ = 0;
    long resamples_ = 0;
};

/// Samples one network realization. Deterministic given (params, seed): a
/// single splitmix64 stream is consumed in a fixed order (indicator rows
/// first, then the draw vectors). A row whose indicator draws all come up
/// empty is redrawn in place until it has at least one out-edge; the number
/// of redraws is recorded on the realization.
[[nodiscard]] inline NetworkRealization sample_network(const ValidatedParams& params, std::uint64_t seed) {
    const long n = params.n();
    if (n < 2)
        throw Error(ErrorCode::IsolatedRow, "need at least two small banks to form interbank rows");
    SplitMix64 rng(seed);

    std::vector<std::vector<std::uint32_t>> neighbors(static_cast<std::size_t>(n));
    long resamples = 0;
    constexpr long kMaxRowAttempts = 1000000;
    for (long j = 0; j < n; ++j) {
        auto& row = neighbors[static_cast<std::size_t>(j)];
        long attempts = 0;
        do {
            if (++attempts > kMaxRowAttempts)
                throw Error(ErrorCode::IsolatedRow, "row resampling budget exhausted (p_ss too small?)");
            row.clear();
            for (long i = 0; i < n; ++i) {
                if (i == j) continue;
                if (rng.bernoulli(params.p_ss())) row.push_back(static_cast<std::uint32_t>(i));
            }
        } while (row.empty());
        resamples += attempts - 1;
    }

    auto draw_vector = [&](const DiscreteDist& dist) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = dist.sample(rng);
        return v;
    };
    auto eta_sb = draw_vector(params.eta_sb());
    auto eta_bs = draw_vector(params.eta_bs());
    auto shocks = draw_vector(params.shock_small());
    auto k = draw_vector(params.k_small());
    auto y = draw_vector(params.y_small());

    return NetworkRealization::from_draws(std::move(neighbors), std::move(eta_sb), std::move(eta_bs),
                                          std::move(shocks), std::move(k), std::move(y), seed, resamples);
}

/// Rebuilds the economy so claims match liabilities in expectation: the
/// big-bank claim fractions get the law of the liability fractions and the
/// big bank owes y * E[eta] per small bank. Requires deterministic Y.
[[nodiscard]] inline ValidatedParams make_regular(const ValidatedParams& params) {
    if (!params.y_small().is_point_mass())
        throw Error(ErrorCode::RequiresDeterministicY, "regular construction needs a point-mass y_small");
    ModelParams p = params.raw();
    p.eta_bs = p.eta_sb;
    p.y_big = params.y_small().max_value() * p.eta_sb.mean();
    return validate_params(p);
}

[[nodiscard]] inline bool is_regular(const ValidatedParams& params, double tol = 1e-12) {
    return params.y_small().is_point_mass() && params.eta_bs().same_atoms(params.eta_sb()) &&
           std::abs(params.y_big() - params.y_small().max_value() * params.p_sb()) <= tol;
}

/// Mean absolute gap between total claims and total liabilities per small
/// bank. Shrinks with n on regular economies.
[[nodiscard]] inline double claims_liability_mismatch(const NetworkRealization& net, double y_big) {
    const auto n = static_cast<std::size_t>(net.n());
    std::vector<double> claims(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double l = net.y_draws()[j] * net.row_weight(j);
        net.for_each_neighbor(j, [&](std::uint32_t i) { claims[i] += l; });
    }
    const double big_total = static_cast<double>(net.n()) * y_big;
    double mismatch = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double claim = claims[i] + net.weight_bs(i) * big_total;
        mismatch += std::abs(claim - net.y_draws()[i]);
    }
    return mismatch / static_cast<double>(n);
}

/// Writes the edge list as CSV (j, i, weight) plus a JSON header with the
/// per-bank draws and the seed.
inline void dump_realization(const NetworkRealization& net, const std::string& csv_path,
                             const std::string& json_path) {
    std::ofstream csv(csv_path);
    csv << "j,i,weight\n";
    char buf[64];
    for (std::size_t j = 0; j < static_cast<std::size_t>(net.n()); ++j) {
        net.for_each_neighbor(j, [&](std::uint32_t i) {
            std::snprintf(buf, sizeof(buf), "%.17g", net.row_weight(j));
            csv << j << ',' << i << ',' << buf << '\n';
        });
    }
    nlohmann::json header{
        {"n", net.n()},
        {"seed", net.seed()},
        {"resamples", net.resamples()},
        {"eta_bar", net.eta_bar()},
        {"eta_sb", net.eta_sb_draws()},
        {"eta_bs", net.eta_bs_draws()},
        {"shocks", net.shock_draws()},
        {"k", net.k_draws()},
        {"y", net.y_draws()},
    };
    std::ofstream(json_path) << header.dump(2) << '\n';
}

}  // namespace sysrisk
