#include "trajgen/hankel.hpp"

#include <stdexcept>
#include <string>

#include "trajgen/numeric.hpp"
#include "trajgen/random.hpp"

namespace trajgen {

SampleLedger& SampleLedger::global() {
    static SampleLedger ledger;
    return ledger;
}

int min_data_length(int n, int m, int t) {
    if (n < 1 || m < 1 || t < 1) throw std::invalid_argument("min_data_length: dimensions must be positive");
    return (m + 1) * t - 1 + n;
}

DataRecord collect_excitation_data(const LtiSystem& sys, int length, double input_scale,
                                   std::uint64_t seed, SampleLedger& ledger,
                                   const Eigen::VectorXd* x0) {
    if (length < 0) throw std::invalid_argument("collect_excitation_data: length must be non-negative");
    if (input_scale <= 0.0) throw std::invalid_argument("collect_excitation_data: input_scale must be positive");
    auto rng = make_stream(seed);

    Eigen::VectorXd x(sys.n());
    if (x0) {
        if (x0->size() != sys.n()) throw std::invalid_argument("collect_excitation_data: bad x0 dimension");
        x = *x0;
    } else {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < sys.n(); ++i) x(i) = gauss(rng);
        const double norm = x.norm();
        if (norm > 0.0) x /= norm;
    }

    std::uniform_real_distribution<double> unif(-input_scale, input_scale);
    DataRecord rec;
    rec.u.resize(sys.m(), length);
    rec.y.resize(sys.q(), length);
    for (int k = 0; k < length; ++k) {
        for (int i = 0; i < sys.m(); ++i) rec.u(i, k) = unif(rng);
        rec.y.col(k) = sys.output(x);
        x = sys.step(x, rec.u.col(k));
    }
    ledger.add(length);
    return rec;
}

HankelMatrix::HankelMatrix(const DataRecord& record, int depth)
    : depth_(depth), m_(static_cast<int>(record.u.rows())), q_(static_cast<int>(record.y.rows())) {
    const int L = record.length();
    if (depth < 1) throw std::invalid_argument("HankelMatrix: depth must be positive");
    if (record.y.cols() != L) throw std::invalid_argument("HankelMatrix: input/output column mismatch");
    if (L < depth) throw std::invalid_argument("HankelMatrix: record shorter than depth");
    const int cols = L - depth + 1;
    h_u_.resize(depth * m_, cols);
    h_y_.resize(depth * q_, cols);
    for (int i = 0; i < depth; ++i) {
        h_u_.middleRows(i * m_, m_) = record.u.middleCols(i, cols);
        h_y_.middleRows(i * q_, q_) = record.y.middleCols(i, cols);
    }
}

Eigen::MatrixXd HankelMatrix::stacked() const {
    Eigen::MatrixXd s(h_u_.rows() + h_y_.rows(), cols());
    s << h_u_, h_y_;
    return s;
}

Eigen::MatrixXd HankelMatrix::input_rows(int k1, int k2) const {
    if (k1 < 0 || k2 < k1 || k2 >= depth_) throw std::out_of_range("HankelMatrix::input_rows: bad block range");
    return h_u_.middleRows(k1 * m_, (k2 - k1 + 1) * m_);
}

Eigen::MatrixXd HankelMatrix::output_rows(int k1, int k2) const {
    if (k1 < 0 || k2 < k1 || k2 >= depth_) throw std::out_of_range("HankelMatrix::output_rows: bad block range");
    return h_y_.middleRows(k1 * q_, (k2 - k1 + 1) * q_);
}

RankCertificate rank_certificate(const HankelMatrix& h, int state_dim) {
    if (state_dim < 1) throw std::invalid_argument("rank_certificate: state_dim must be positive");
    RankCertificate cert;
    cert.required = state_dim + h.depth() * h.m();
    const SingularSpectrum spec = singular_spectrum(h.stacked());
    cert.rank = spec.rank;
    cert.threshold = spec.threshold;
    cert.sigma_max = spec.values.size() ? spec.values(0) : 0.0;
    cert.sigma_min = spec.values.size() ? spec.values(spec.values.size() - 1) : 0.0;
    cert.ok = (cert.rank == cert.required);
    if (h.q() == state_dim) {
        Eigen::MatrixXd small(h.inputs().rows() + state_dim, h.cols());
        small << h.inputs(), h.output_rows(0, 0);
        cert.companion_rank = numerical_rank(small);
    }
    return cert;
}

DataRecord collect_certified(const LtiSystem& sys, int length, int depth, double input_scale,
                             std::uint64_t seed, int max_attempts, SampleLedger& ledger) {
    if (max_attempts < 1) throw std::invalid_argument("collect_certified: max_attempts must be positive");
    std::string last;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        DataRecord rec = collect_excitation_data(sys, length, input_scale, mix_seed(seed, attempt), ledger);
        const RankCertificate cert = rank_certificate(HankelMatrix(rec, depth), sys.n());
        if (cert.ok) return rec;
        last = "rank " + std::to_string(cert.rank) + " of required " + std::to_string(cert.required);
    }
    throw std::runtime_error("collect_certified: excitation failed certification after " +
                             std::to_string(max_attempts) + " attempts (" + last + ")");
}

}  // namespace trajgen
