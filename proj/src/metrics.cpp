#include "semadv/metrics.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "semadv/rng.hpp"

namespace semadv {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. A is destroyed;
// eigenvalues land in `eig`, eigenvectors in the columns of V.
void jacobi_eigen(std::vector<double>& a, int d, std::vector<double>& eig, std::vector<double>& v) {
    v.assign(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) v[static_cast<size_t>(i) * d + i] = 1.0;

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += a[static_cast<size_t>(p) * d + q] * a[static_cast<size_t>(p) * d + q];
        if (off < 1e-22) {
            eig.resize(d);
            for (int i = 0; i < d; ++i) eig[static_cast<size_t>(i)] = a[static_cast<size_t>(i) * d + i];
            return;
        }
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = a[static_cast<size_t>(p) * d + q];
                if (apq == 0.0) continue;
                const double app = a[static_cast<size_t>(p) * d + p];
                const double aqq = a[static_cast<size_t>(q) * d + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a[static_cast<size_t>(k) * d + p];
                    const double akq = a[static_cast<size_t>(k) * d + q];
                    a[static_cast<size_t>(k) * d + p] = c * akp - s * akq;
                    a[static_cast<size_t>(k) * d + q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[static_cast<size_t>(p) * d + k];
                    const double aqk = a[static_cast<size_t>(q) * d + k];
                    a[static_cast<size_t>(p) * d + k] = c * apk - s * aqk;
                    a[static_cast<size_t>(q) * d + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const double vkp = v[static_cast<size_t>(k) * d + p];
                    const double vkq = v[static_cast<size_t>(k) * d + q];
                    v[static_cast<size_t>(k) * d + p] = c * vkp - s * vkq;
                    v[static_cast<size_t>(k) * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    throw std::runtime_error("compute_fid: eigensolver did not converge");
}

// Symmetric PSD square root; small negative eigenvalues clamp to zero.
std::vector<double> sqrtm_psd(std::vector<double> a, int d) {
    std::vector<double> eig, v;
    jacobi_eigen(a, d, eig, v);
    std::vector<double> out(static_cast<size_t>(d) * d, 0.0);
    for (int k = 0; k < d; ++k) {
        const double lam = eig[static_cast<size_t>(k)] > 0.0 ? std::sqrt(eig[static_cast<size_t>(k)]) : 0.0;
        if (lam == 0.0) continue;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                out[static_cast<size_t>(i) * d + j] += lam * v[static_cast<size_t>(i) * d + k] * v[static_cast<size_t>(j) * d + k];
    }
    return out;
}

std::vector<double> matmul_sq(const std::vector<double>& a, const std::vector<double>& b, int d) {
    std::vector<double> out(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            const double av = a[static_cast<size_t>(i) * d + k];
            if (av == 0.0) continue;
            for (int j = 0; j < d; ++j) out[static_cast<size_t>(i) * d + j] += av * b[static_cast<size_t>(k) * d + j];
        }
    return out;
}

double polynomial_kernel(const std::vector<double>& x, const std::vector<double>& y, int d) {
    double dot = 0.0;
    for (int i = 0; i < d; ++i) dot += x[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
    const double base = dot / d + 1.0;
    return base * base * base;
}

std::vector<int> subset_indices(uint64_t seed, int round, int pool, int subset_size) {
    // keyed by (seed, round, pool size) so both arguments of a symmetric call
    // draw the same indices for equally sized pools
    Rng rng(derive_seed(seed, static_cast<uint64_t>(round), static_cast<uint64_t>(pool)));
    std::vector<int> idx(pool);
    for (int i = 0; i < pool; ++i) idx[static_cast<size_t>(i)] = i;
    rng.shuffle(idx.begin(), idx.end());
    idx.resize(subset_size);
    return idx;
}

}  // namespace

FeatureSet FeatureSet::build(const std::vector<std::vector<double>>& features) {
    if (features.empty()) throw std::invalid_argument("FeatureSet: empty feature list");
    FeatureSet fs;
    fs.dim = static_cast<int>(features.front().size());
    for (const auto& f : features) {
        if (static_cast<int>(f.size()) != fs.dim) throw std::invalid_argument("FeatureSet: inconsistent feature dimension");
        fs.rows.push_back(f);
    }
    const int n = fs.count(), d = fs.dim;
    fs.mu.assign(d, 0.0);
    for (const auto& r : fs.rows)
        for (int j = 0; j < d; ++j) fs.mu[static_cast<size_t>(j)] += r[static_cast<size_t>(j)];
    for (int j = 0; j < d; ++j) fs.mu[static_cast<size_t>(j)] /= n;

    fs.sigma.assign(static_cast<size_t>(d) * d, 0.0);
    if (n > 1) {
        for (const auto& r : fs.rows)
            for (int i = 0; i < d; ++i) {
                const double ci = r[static_cast<size_t>(i)] - fs.mu[static_cast<size_t>(i)];
                for (int j = 0; j < d; ++j)
                    fs.sigma[static_cast<size_t>(i) * d + j] += ci * (r[static_cast<size_t>(j)] - fs.mu[static_cast<size_t>(j)]);
            }
        for (auto& v : fs.sigma) v /= (n - 1);
    }
    return fs;
}

double compute_asr(const std::vector<AttackResult>& results) {
    if (results.empty()) throw std::invalid_argument("compute_asr: empty result list");
    int succ = 0;
    for (const auto& r : results) succ += r.success ? 1 : 0;
    return 100.0 * succ / static_cast<double>(results.size());
}

double compute_fid(const FeatureSet& a, const FeatureSet& b) {
    if (a.dim != b.dim) throw std::invalid_argument("compute_fid: feature dimension mismatch");
    const int d = a.dim;
    if (a.count() < d || b.count() < d)
        std::cerr << "[metrics] warning: FID with fewer samples than feature dimensions (" << a.count() << "," << b.count()
                  << " vs d=" << d << ")\n";

    double mean_term = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = a.mu[static_cast<size_t>(i)] - b.mu[static_cast<size_t>(i)];
        mean_term += diff * diff;
    }

    const std::vector<double> sa_root = sqrtm_psd(a.sigma, d);
    std::vector<double> inner = matmul_sq(matmul_sq(sa_root, b.sigma, d), sa_root, d);
    // symmetrize against round-off before the second root
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double m = 0.5 * (inner[static_cast<size_t>(i) * d + j] + inner[static_cast<size_t>(j) * d + i]);
            inner[static_cast<size_t>(i) * d + j] = m;
            inner[static_cast<size_t>(j) * d + i] = m;
        }
    const std::vector<double> cross_root = sqrtm_psd(std::move(inner), d);

    double trace_term = 0.0;
    for (int i = 0; i < d; ++i)
        trace_term += a.sigma[static_cast<size_t>(i) * d + i] + b.sigma[static_cast<size_t>(i) * d + i] -
                      2.0 * cross_root[static_cast<size_t>(i) * d + i];
    return mean_term + trace_term;
}

double compute_kid(const FeatureSet& a, const FeatureSet& b, int subset_size, int subsets, uint64_t seed) {
    if (subset_size < 2) throw std::invalid_argument("compute_kid: subset_size must be >= 2");
    if (subsets < 1) throw std::invalid_argument("compute_kid: need at least one subset");
    if (a.count() < subset_size || b.count() < subset_size)
        throw std::invalid_argument("compute_kid: set sizes must be >= subset_size");
    if (a.dim != b.dim) throw std::invalid_argument("compute_kid: feature dimension mismatch");

    const int d = a.dim, m = subset_size;
    double total = 0.0;
    for (int round = 0; round < subsets; ++round) {
        const std::vector<int> ia = subset_indices(seed, round, a.count(), m);
        const std::vector<int> ib = subset_indices(seed, round, b.count(), m);
        double kxx = 0.0, kyy = 0.0, kxy = 0.0;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                const auto& xi = a.rows[static_cast<size_t>(ia[static_cast<size_t>(i)])];
                const auto& yj = b.rows[static_cast<size_t>(ib[static_cast<size_t>(j)])];
                kxy += polynomial_kernel(xi, yj, d);
                if (i != j) {
                    kxx += polynomial_kernel(xi, a.rows[static_cast<size_t>(ia[static_cast<size_t>(j)])], d);
                    kyy += polynomial_kernel(yj, b.rows[static_cast<size_t>(ib[static_cast<size_t>(i)])], d);
                }
            }
        }
        total += kxx / (static_cast<double>(m) * (m - 1)) + kyy / (static_cast<double>(m) * (m - 1)) -
                 2.0 * kxy / (static_cast<double>(m) * m);
    }
    return total / subsets;
}

std::vector<double> transfer_eval(const std::vector<Tensor>& adv_images, const std::vector<int>& original_labels,
                                  std::vector<Classifier*>& victims) {
    if (adv_images.size() != original_labels.size())
        throw std::invalid_argument("transfer_eval: image/label count mismatch");
    if (adv_images.empty()) throw std::invalid_argument("transfer_eval: empty image list");
    std::vector<double> out;
    for (Classifier* victim : victims) {
        int flips = 0;
        for (size_t i = 0; i < adv_images.size(); ++i) {
            if (victim->config().num_classes <= original_labels[i])
                throw std::invalid_argument("transfer_eval: victim label space too small");
            if (victim->predict(adv_images[i]) != original_labels[i]) ++flips;
        }
        out.push_back(100.0 * flips / static_cast<double>(adv_images.size()));
    }
    return out;
}

}  // namespace semadv
