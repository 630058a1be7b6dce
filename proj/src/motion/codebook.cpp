#include "vocapose/motion/codebook.hpp"

#include "vocapose/core/kernels.hpp"

namespace vp::motion {

Codebook::Codebook(int64_t k, int64_t d)
    : entries({k, d}), ema_count(static_cast<size_t>(k), 0.0), ema_sum({k, d}),
      last_used(static_cast<size_t>(k), 0) {
    if (k < 1 || d < 1) throw std::invalid_argument("codebook needs K >= 1 and D >= 1");
}

void Codebook::init_gaussian(core::Rng& rng, double scale, double offset) {
    for (double& x : entries.data) x = offset + rng.gaussian(0.0, scale);
    for (int64_t i = 0; i < entries.numel(); ++i) ema_sum.data[i] = entries.data[i];
    std::fill(ema_count.begin(), ema_count.end(), 1.0);
}

void Codebook::init_from_data(const core::Tensor& data, core::Rng& rng) {
    if (data.rank() != 2 || data.shape[1] != dim())
        throw core::ShapeError("codebook init_from_data", {-1, dim()}, data.shape);
    if (data.shape[0] < 1) throw std::invalid_argument("codebook init_from_data: empty data");
    for (int64_t k = 0; k < size(); ++k) {
        const int64_t row = static_cast<int64_t>(rng.below(static_cast<uint64_t>(data.shape[0])));
        for (int64_t j = 0; j < dim(); ++j) {
            entries.at(k, j) = data.at(row, j);
            ema_sum.at(k, j) = data.at(row, j);
        }
    }
    std::fill(ema_count.begin(), ema_count.end(), 1.0);
}

QuantizeResult quantize(const std::vector<double>& z, const Codebook& cb) {
    if (cb.size() < 1) throw std::invalid_argument("quantize: empty codebook");
    if (static_cast<int64_t>(z.size()) != cb.dim())
        throw core::ShapeError("quantize", {cb.dim()}, {static_cast<int64_t>(z.size())});
    for (double v : z)
        if (!std::isfinite(v)) throw std::invalid_argument("quantize: non-finite input vector");
    int32_t idx = 0;
    core::serial::nearest_code(z.data(), cb.entries.data.data(), &idx, 1, cb.size(), cb.dim());
    QuantizeResult r;
    r.index = idx;
    r.code.assign(cb.entries.data.begin() + idx * cb.dim(),
                  cb.entries.data.begin() + (idx + 1) * cb.dim());
    return r;
}

std::vector<int32_t> quantize_rows(const core::Tensor& z, const Codebook& cb) {
    if (z.rank() != 2 || z.shape[1] != cb.dim())
        throw core::ShapeError("quantize_rows", {-1, cb.dim()}, z.shape);
    core::check_finite("quantize_rows", z);
    std::vector<int32_t> idx(static_cast<size_t>(z.shape[0]));
    core::kernels::nearest_code(z.data.data(), cb.entries.data.data(), idx.data(), z.shape[0],
                                cb.size(), cb.dim());
    return idx;
}

core::Tensor lookup_rows(const Codebook& cb, const std::vector<int32_t>& idx) {
    core::Tensor out({static_cast<int64_t>(idx.size()), cb.dim()});
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= cb.size())
            throw std::out_of_range("codebook lookup: id " + std::to_string(idx[i]) + " at position " +
                                    std::to_string(i) + " outside [0, " + std::to_string(cb.size()) +
                                    ")");
        std::copy_n(cb.entries.data.begin() + idx[i] * cb.dim(), cb.dim(),
                    out.data.begin() + static_cast<int64_t>(i) * cb.dim());
    }
    return out;
}

void ema_update(Codebook& cb, const core::Tensor& z, const std::vector<int32_t>& assign,
                double decay, double epsilon, int64_t step) {
    if (z.rank() != 2 || z.shape[1] != cb.dim())
        throw core::ShapeError("ema_update", {-1, cb.dim()}, z.shape);
    if (static_cast<int64_t>(assign.size()) != z.shape[0])
        throw std::invalid_argument("ema_update: assignment count != latent count");
    const int64_t k = cb.size(), d = cb.dim();
    std::vector<double> batch_count(static_cast<size_t>(k), 0.0);
    core::Tensor batch_sum({k, d});
    for (int64_t i = 0; i < z.shape[0]; ++i) {
        const int32_t a = assign[static_cast<size_t>(i)];
        batch_count[static_cast<size_t>(a)] += 1.0;
        for (int64_t j = 0; j < d; ++j) batch_sum.at(a, j) += z.at(i, j);
    }
    for (int64_t c = 0; c < k; ++c) {
        cb.ema_count[static_cast<size_t>(c)] =
            decay * cb.ema_count[static_cast<size_t>(c)] + (1.0 - decay) * batch_count[static_cast<size_t>(c)];
        for (int64_t j = 0; j < d; ++j)
            cb.ema_sum.at(c, j) = decay * cb.ema_sum.at(c, j) + (1.0 - decay) * batch_sum.at(c, j);
        const double denom = cb.ema_count[static_cast<size_t>(c)] + epsilon;
        for (int64_t j = 0; j < d; ++j) cb.entries.at(c, j) = cb.ema_sum.at(c, j) / denom;
        if (batch_count[static_cast<size_t>(c)] > 0.0) cb.last_used[static_cast<size_t>(c)] = step;
    }
}

int64_t reset_stale_codes(Codebook& cb, const core::Tensor& z, int64_t step, int64_t staleness,
                          core::Rng& rng) {
    if (z.rank() != 2 || z.shape[0] < 1) return 0;
    int64_t resets = 0;
    for (int64_t c = 0; c < cb.size(); ++c) {
        if (step - cb.last_used[static_cast<size_t>(c)] < staleness) continue;
        const int64_t row = static_cast<int64_t>(rng.below(static_cast<uint64_t>(z.shape[0])));
        for (int64_t j = 0; j < cb.dim(); ++j) {
            cb.entries.at(c, j) = z.at(row, j);
            cb.ema_sum.at(c, j) = z.at(row, j);
        }
        cb.ema_count[static_cast<size_t>(c)] = 1.0;
        cb.last_used[static_cast<size_t>(c)] = step;
        ++resets;
    }
    return resets;
}

}  // namespace vp::motion
