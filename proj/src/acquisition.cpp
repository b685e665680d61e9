#include "schieber/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace schieber {

namespace {

constexpr int kFftSize = 8192;  // >= 2 L_c - 1, so the linear correlation does not wrap
constexpr int kMaxAntennas = 32;
constexpr long long kGramRefresh = 256;

using cd = std::complex<double>;

const long long kLc = static_cast<long long>(kCodeSamples);

void check_window(const ReceiveStream& stream, long long start, long long length) {
    if (start < 0 || start + length > stream.size()) {
        throw std::out_of_range("window [" + std::to_string(start) + ", " +
                                std::to_string(start + length) + ") outside the stream of " +
                                std::to_string(stream.size()) + " samples");
    }
}

long long circular_distance(long long a, long long b, long long n) {
    const long long d = std::llabs(a - b) % n;
    return std::min(d, n - d);
}

}  // namespace

double doppler_hz(int bin) {
    if (bin < 0 || bin >= kDopplerBins) throw std::out_of_range("Doppler bin out of range");
    return -kDopplerMaxHz + kDopplerStepHz * bin;
}

void AcquisitionSettings::validate(int antennas) const {
    if (!(baseline_threshold > 0.0) || !(jass_threshold > 0.0)) {
        throw std::invalid_argument("acquisition thresholds must be positive");
    }
    if (nulled_dimensions < 0 || nulled_dimensions >= antennas) {
        throw std::invalid_argument("nulled dimension count must be in [0, antennas)");
    }
    if (window_start < 0) throw std::invalid_argument("acquisition window start must be >= 0");
    if (suppress_samples < 0 || suppress_bins < 0) {
        throw std::invalid_argument("suppression radii must be non-negative");
    }
}

CafPeak global_peak(const CafGrid& grid) {
    CafPeak best{0, 0, -1.0};
    for (Eigen::Index l = 0; l < grid.values.rows(); ++l) {
        for (Eigen::Index f = 0; f < grid.values.cols(); ++f) {
            if (grid.values(l, f) > best.value) best = {l, static_cast<int>(f), grid.values(l, f)};
        }
    }
    return best;
}

std::vector<CafPeak> find_peaks(const CafGrid& grid, double threshold, int suppress_samples,
                                int suppress_bins) {
    const auto& v = grid.values;
    const long long rows = v.rows();
    const int cols = static_cast<int>(v.cols());
    std::vector<CafPeak> maxima;
    for (long long l = 0; l < rows; ++l) {
        for (int f = 0; f < cols; ++f) {
            const double x = v(l, f);
            if (!(x >= threshold)) continue;
            bool is_max = true;
            for (int dl = -1; dl <= 1 && is_max; ++dl) {
                const long long ln = ((l + dl) % rows + rows) % rows;
                for (int df = -1; df <= 1; ++df) {
                    const int fn = f + df;
                    if ((dl == 0 && df == 0) || fn < 0 || fn >= cols) continue;
                    const double y = v(ln, fn);
                    // Plateaus resolve to the lexicographically smallest cell.
                    if (y > x || (y == x && std::make_pair(ln, fn) < std::make_pair(l, f))) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) maxima.push_back({l, f, x});
        }
    }
    std::sort(maxima.begin(), maxima.end(), [](const CafPeak& a, const CafPeak& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.code_phase != b.code_phase) return a.code_phase < b.code_phase;
        return a.doppler_bin < b.doppler_bin;
    });
    std::vector<CafPeak> kept;
    for (const auto& p : maxima) {
        const bool dup = std::any_of(kept.begin(), kept.end(), [&](const CafPeak& k) {
            return circular_distance(p.code_phase, k.code_phase, rows) <= suppress_samples &&
                   std::abs(p.doppler_bin - k.doppler_bin) <= suppress_bins;
        });
        if (!dup) kept.push_back(p);
    }
    return kept;
}

CodeProjection::CodeProjection(const SpreadingCode& code) : code_(code.samples) {}

Eigen::VectorXcd CodeProjection::apply(const Eigen::VectorXcd& x) const {
    if (x.size() != code_.size()) throw std::invalid_argument("CodeProjection: length mismatch");
    const cd proj = code_.cast<cd>().dot(x);  // c^T x (c real)
    return x - code_.cast<cd>() * (proj / code_.squaredNorm());
}

Eigen::MatrixXcd CodeProjection::apply_rows(const Eigen::MatrixXcd& y) const {
    if (y.cols() != code_.size()) throw std::invalid_argument("CodeProjection: length mismatch");
    const Eigen::VectorXcd yc = y * code_.cast<cd>();
    return y - (yc / code_.squaredNorm()) * code_.cast<cd>().transpose();
}

double CodeProjection::trace() const {
    const double n2 = code_.squaredNorm();
    double t = 0.0;
    for (Eigen::Index k = 0; k < code_.size(); ++k) t += 1.0 - code_[k] * code_[k] / n2;
    return t;
}

Eigen::MatrixXcd code_window(const ReceiveStream& stream, long long start) {
    check_window(stream, start, kLc);
    return stream.samples.middleCols(start, kLc);
}

Eigen::MatrixXcd doppler_wipe(const ReceiveStream& stream, long long start, double f_hz) {
    Eigen::MatrixXcd y = code_window(stream, start);
    const double w = -2.0 * kPi * f_hz * stream.sample_period;
    for (long long k = 0; k < kLc; ++k) {
        y.col(k) *= std::polar(1.0, w * static_cast<double>(start + k));
    }
    return y;
}

Eigen::VectorXcd matched_vector(const ReceiveStream& stream, const SpreadingCode& code,
                                long long start, double f_hz) {
    return doppler_wipe(stream, start, f_hz) * code.samples.cast<cd>();
}

double caf_baseline(const ReceiveStream& stream, const SpreadingCode& code, long long start,
                    double f_hz) {
    const double energy = code_window(stream, start).squaredNorm();
    if (energy <= 0.0) return 0.0;
    return matched_vector(stream, code, start, f_hz).squaredNorm() / energy;
}

NullingProjection nulling_projection(const Eigen::MatrixXcd& gram, const Eigen::VectorXcd& m,
                                     int nulled) {
    const Eigen::Index b = gram.rows();
    if (nulled < 0 || nulled >= b) throw std::invalid_argument("nulling: need 0 <= I < B");
    const Eigen::MatrixXcd reduced = gram - m * m.adjoint() / static_cast<double>(kLc);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(reduced);
    NullingProjection p;
    p.nulled = nulled;
    p.eigenvalues = eig.eigenvalues().reverse();
    p.nulled_basis = eig.eigenvectors().rightCols(nulled).rowwise().reverse();
    p.matrix = Eigen::MatrixXcd::Identity(b, b) - p.nulled_basis * p.nulled_basis.adjoint();
    return p;
}

NullingProjection interference_projection(const ReceiveStream& stream, const SpreadingCode& code,
                                          long long start, double f_hz, int nulled) {
    const Eigen::MatrixXcd y = code_window(stream, start);
    return nulling_projection(y * y.adjoint(), matched_vector(stream, code, start, f_hz), nulled);
}

double projected_caf(const NullingProjection& p, const Eigen::MatrixXcd& gram,
                     const Eigen::VectorXcd& m) {
    const double total = gram.trace().real();
    const double den = (p.matrix * gram).trace().real();
    if (!(den > 1e-12 * total)) return 0.0;
    const double num = (p.matrix * m).squaredNorm();
    return std::clamp(num / den, 0.0, static_cast<double>(kLc));
}

double caf_jass(const ReceiveStream& stream, const SpreadingCode& code, long long start,
                double f_hz, int nulled) {
    const Eigen::MatrixXcd y = code_window(stream, start);
    const Eigen::MatrixXcd g = y * y.adjoint();
    const Eigen::VectorXcd m = matched_vector(stream, code, start, f_hz);
    return projected_caf(nulling_projection(g, m, nulled), g, m);
}

namespace {

double direct_caf(const Eigen::MatrixXcd& gram, const cd* m, int antennas, int nulled) {
    const Eigen::Map<const Eigen::VectorXcd> mv(m, antennas);
    return projected_caf(nulling_projection(gram, mv, nulled), gram, mv);
}

// Root of the downdated secular equation inside (lambda[i-1], lambda[i]).
// Writes mu and |u^H m|^2 for the corresponding eigenvector.
bool secular_root(const double* lambda, const double* w, int n, int i, double rho, double& mu,
                  double& energy) {
    const double lo = lambda[i - 1];
    const double hi = lambda[i];
    const double gap = hi - lo;
    const double mid = lo + 0.5 * gap;
    double g_mid = 1.0;
    for (int j = 0; j < n; ++j) g_mid -= rho * w[j] / (lambda[j] - mid);

    const int p = g_mid > 0.0 ? i : i - 1;  // pole nearest to the root
    const double sgn = g_mid > 0.0 ? -1.0 : 1.0;
    double diff[kMaxAntennas];
    for (int j = 0; j < n; ++j) diff[j] = lambda[j] - lambda[p];

    auto eval = [&](double delta, double& h, double& dh) {
        double psi = 0.0, dpsi = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == p) continue;
            const double inv = 1.0 / (diff[j] - sgn * delta);
            const double t = w[j] * inv;
            psi += t;
            dpsi += t * inv;
        }
        psi *= rho;
        dpsi *= rho * sgn;
        h = delta * (1.0 - psi) + sgn * rho * w[p];
        dh = (1.0 - psi) - delta * dpsi;
    };

    // H has the sign of sgn at 0+ and the opposite sign at the bracket's far end.
    double a = 0.0, b = 0.5 * gap;
    double delta = std::min(b, rho * w[p]);
    if (!(delta > 0.0)) delta = 0.5 * b;
    for (int iter = 0; iter < 100; ++iter) {
        double h, dh;
        eval(delta, h, dh);
        if (h == 0.0) break;
        if ((h > 0.0) == (sgn > 0.0)) {
            a = delta;
        } else {
            b = delta;
        }
        double next = delta - h / dh;
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - delta) <= 1e-15 * std::max(delta, 1e-300) || b - a <= 1e-15 * b) {
            delta = next;
            break;
        }
        delta = next;
    }
    mu = lambda[p] + sgn * delta;
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
        const double d = j == p ? -sgn * delta : diff[j] - sgn * delta;
        s += w[j] / (d * d);
    }
    if (!(s > 0.0) || !std::isfinite(s)) return false;
    energy = 1.0 / (rho * rho * s);
    return std::isfinite(mu);
}

}  // namespace

double secular_caf(const double* eigenvalues, const cd* eigenvectors, const Eigen::MatrixXcd& gram,
                   const cd* m, int antennas, int nulled) {
    const int n = antennas;
    if (n > kMaxAntennas) return direct_caf(gram, m, n, nulled);
    double w[kMaxAntennas];
    double m2 = 0.0;
    for (int b = 0; b < n; ++b) m2 += std::norm(m[b]);
    const double trace = gram.trace().real();
    if (!(m2 > 0.0) || !(trace > 0.0)) return 0.0;
    if (nulled == 0) return std::min(m2 / trace, static_cast<double>(kLc));

    double wsum = 0.0;
    for (int j = 0; j < n; ++j) {
        const cd* v = eigenvectors + static_cast<std::ptrdiff_t>(j) * n;
        cd z = 0.0;
        for (int b = 0; b < n; ++b) z += std::conj(v[b]) * m[b];
        w[j] = std::norm(z);
        wsum += w[j];
    }
    const double scale = std::max(std::abs(eigenvalues[n - 1]), std::abs(eigenvalues[0]));
    for (int i = n - nulled; i < n; ++i) {
        if (eigenvalues[i] - eigenvalues[i - 1] <= 1e-12 * scale) return direct_caf(gram, m, n, nulled);
    }
    for (int j = n - nulled - 1; j < n; ++j) {
        if (w[j] <= 1e-13 * wsum) return direct_caf(gram, m, n, nulled);
    }

    const double rho = 1.0 / static_cast<double>(kLc);
    double removed_m = 0.0, removed_g = 0.0;
    for (int i = n - 1; i >= n - nulled; --i) {
        double mu = 0.0, e = 0.0;
        if (!secular_root(eigenvalues, w, n, i, rho, mu, e)) return direct_caf(gram, m, n, nulled);
        removed_m += e;
        removed_g += mu + rho * e;
    }
    const double den = trace - removed_g;
    if (!(den > 1e-12 * trace)) return 0.0;
    const double num = std::max(0.0, m2 - removed_m);
    return std::clamp(num / den, 0.0, static_cast<double>(kLc));
}

struct AcquisitionEngine::Impl {
    int antennas = 0;
    std::unique_ptr<detail::FftPlan> plan;
    std::vector<cd> spectra;  // (bin * B + b) * kFftSize
    std::vector<double> traces;

    std::once_flag grams_once;
    std::vector<Eigen::MatrixXcd> grams;
    std::vector<double> eigenvalues;  // l * B, ascending
    std::vector<cd> eigenvectors;     // l * B * B, column-major

    void build_grams(const ReceiveStream& stream, long long s0) {
        const int n = antennas;
        grams.resize(static_cast<std::size_t>(kLc));
        eigenvalues.resize(static_cast<std::size_t>(kLc * n));
        eigenvectors.resize(static_cast<std::size_t>(kLc * n * n));
        Eigen::MatrixXcd g;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(n);
        for (long long l = 0; l < kLc; ++l) {
            if (l % kGramRefresh == 0) {
                const auto w = stream.samples.middleCols(s0 + l, kLc);
                g = w * w.adjoint();
            } else {
                const auto in = stream.samples.col(s0 + l + kLc - 1);
                const auto out = stream.samples.col(s0 + l - 1);
                g.noalias() += in * in.adjoint();
                g.noalias() -= out * out.adjoint();
            }
            g = 0.5 * (g + g.adjoint()).eval();
            grams[static_cast<std::size_t>(l)] = g;
            eig.compute(g);
            std::copy_n(eig.eigenvalues().data(), n, eigenvalues.data() + l * n);
            std::copy_n(eig.eigenvectors().data(), n * n, eigenvectors.data() + l * n * n);
        }
    }
};

AcquisitionEngine::AcquisitionEngine(const ReceiveStream& stream, AcquisitionSettings settings)
    : stream_(&stream), settings_(settings), impl_(std::make_unique<Impl>()) {
    const int n = stream.antennas();
    settings_.validate(n);
    const long long s0 = settings_.window_start;
    check_window(stream, s0, 2 * kLc - 1);
    impl_->antennas = n;
    impl_->plan = std::make_unique<detail::FftPlan>(kFftSize);

    impl_->traces.resize(static_cast<std::size_t>(kLc));
    double t = stream.samples.middleCols(s0, kLc).squaredNorm();
    for (long long l = 0; l < kLc; ++l) {
        if (l > 0) {
            if (l % kGramRefresh == 0) {
                t = stream.samples.middleCols(s0 + l, kLc).squaredNorm();
            } else {
                t += stream.samples.col(s0 + l + kLc - 1).squaredNorm() -
                     stream.samples.col(s0 + l - 1).squaredNorm();
            }
        }
        impl_->traces[static_cast<std::size_t>(l)] = t;
    }

    const long long span = 2 * kLc - 1;
    impl_->spectra.assign(static_cast<std::size_t>(kDopplerBins) * n * kFftSize, cd(0.0, 0.0));
    std::vector<cd> phasor(static_cast<std::size_t>(span));
    std::vector<cd> buffer(kFftSize);
    for (int bin = 0; bin < kDopplerBins; ++bin) {
        const double w = -2.0 * kPi * doppler_hz(bin) * stream.sample_period;
        for (long long k = 0; k < span; ++k) {
            phasor[static_cast<std::size_t>(k)] = std::polar(1.0, w * static_cast<double>(s0 + k));
        }
        for (int b = 0; b < n; ++b) {
            std::fill(buffer.begin(), buffer.end(), cd(0.0, 0.0));
            for (long long k = 0; k < span; ++k) {
                buffer[static_cast<std::size_t>(k)] = stream.samples(b, s0 + k) * phasor[static_cast<std::size_t>(k)];
            }
            impl_->plan->forward(buffer.data(),
                                 impl_->spectra.data() + (static_cast<std::size_t>(bin) * n + b) * kFftSize);
        }
    }
}

AcquisitionEngine::~AcquisitionEngine() = default;

std::vector<cd> AcquisitionEngine::matched_field(int prn) const {
    if (prn < 1 || prn > 32) throw std::invalid_argument("matched_field: unknown PRN");
    const int n = impl_->antennas;
    const auto& code = ca_codes()[static_cast<std::size_t>(prn - 1)];
    std::vector<cd> buffer(kFftSize, cd(0.0, 0.0));
    std::vector<cd> code_spectrum(kFftSize);
    for (long long k = 0; k < kLc; ++k) buffer[static_cast<std::size_t>(k)] = code.samples[k];
    impl_->plan->forward(buffer.data(), code_spectrum.data());
    for (auto& c : code_spectrum) c = std::conj(c) / static_cast<double>(kFftSize);

    std::vector<cd> field(static_cast<std::size_t>(kDopplerBins * kLc * n));
    std::vector<cd> product(kFftSize);
    for (int bin = 0; bin < kDopplerBins; ++bin) {
        for (int b = 0; b < n; ++b) {
            const cd* x = impl_->spectra.data() + (static_cast<std::size_t>(bin) * n + b) * kFftSize;
            for (int k = 0; k < kFftSize; ++k) product[static_cast<std::size_t>(k)] = x[k] * code_spectrum[static_cast<std::size_t>(k)];
            impl_->plan->inverse(product.data(), buffer.data());
            cd* dst = field.data() + static_cast<std::size_t>(bin) * kLc * n + b;
            for (long long l = 0; l < kLc; ++l) dst[l * n] = buffer[static_cast<std::size_t>(l)];
        }
    }
    return field;
}

Eigen::VectorXcd AcquisitionEngine::matched_vector(int prn, long long code_phase, int bin) const {
    const auto& code = ca_codes()[static_cast<std::size_t>(prn - 1)];
    return schieber::matched_vector(*stream_, code, settings_.window_start + code_phase, doppler_hz(bin));
}

const Eigen::MatrixXcd& AcquisitionEngine::gram(long long code_phase) const {
    std::call_once(impl_->grams_once, [this] { impl_->build_grams(*stream_, settings_.window_start); });
    return impl_->grams.at(static_cast<std::size_t>(code_phase));
}

double AcquisitionEngine::gram_trace(long long code_phase) const {
    return impl_->traces.at(static_cast<std::size_t>(code_phase));
}

CafGrid AcquisitionEngine::baseline_grid(int prn) const {
    const int n = impl_->antennas;
    const auto field = matched_field(prn);
    CafGrid grid;
    grid.prn = prn;
    grid.window_start = settings_.window_start;
    grid.values.resize(kLc, kDopplerBins);
    for (int bin = 0; bin < kDopplerBins; ++bin) {
        for (long long l = 0; l < kLc; ++l) {
            const cd* m = field.data() + (static_cast<std::size_t>(bin) * kLc + l) * n;
            double m2 = 0.0;
            for (int b = 0; b < n; ++b) m2 += std::norm(m[b]);
            const double t = impl_->traces[static_cast<std::size_t>(l)];
            grid.values(l, bin) = t > 0.0 ? std::min(m2 / t, static_cast<double>(kLc)) : 0.0;
        }
    }
    return grid;
}

CafGrid AcquisitionEngine::jass_grid(int prn) const {
    const int n = impl_->antennas;
    static_cast<void>(gram(0));
    const auto field = matched_field(prn);
    CafGrid grid;
    grid.prn = prn;
    grid.window_start = settings_.window_start;
    grid.values.resize(kLc, kDopplerBins);
    for (long long l = 0; l < kLc; ++l) {
        const double* lambda = impl_->eigenvalues.data() + l * n;
        const cd* v = impl_->eigenvectors.data() + l * n * n;
        const auto& g = impl_->grams[static_cast<std::size_t>(l)];
        for (int bin = 0; bin < kDopplerBins; ++bin) {
            const cd* m = field.data() + (static_cast<std::size_t>(bin) * kLc + l) * n;
            grid.values(l, bin) = secular_caf(lambda, v, g, m, n, settings_.nulled_dimensions);
        }
    }
    return grid;
}

std::optional<SignalCandidate> AcquisitionEngine::acquire_baseline(int prn) const {
    const CafGrid grid = baseline_grid(prn);
    const CafPeak peak = global_peak(grid);
    if (!(peak.value >= settings_.baseline_threshold)) return std::nullopt;
    const int n = impl_->antennas;
    SignalCandidate c;
    c.prn = prn;
    c.code_phase = peak.code_phase;
    c.doppler_bin = peak.doppler_bin;
    c.doppler_hz = doppler_hz(peak.doppler_bin);
    c.caf = peak.value;
    c.projection.matrix = Eigen::MatrixXcd::Identity(n, n);
    c.projection.nulled = 0;
    c.projection.nulled_basis = Eigen::MatrixXcd(n, 0);
    return c;
}

std::vector<SignalCandidate> AcquisitionEngine::acquire_peaks(int prn) const {
    const CafGrid grid = jass_grid(prn);
    const auto peaks = find_peaks(grid, settings_.jass_threshold, settings_.suppress_samples,
                                  settings_.suppress_bins);
    std::vector<SignalCandidate> out;
    for (const auto& p : peaks) {
        SignalCandidate c;
        c.prn = prn;
        c.code_phase = p.code_phase;
        c.doppler_bin = p.doppler_bin;
        c.doppler_hz = doppler_hz(p.doppler_bin);
        c.caf = p.value;
        c.projection = nulling_projection(gram(p.code_phase), matched_vector(prn, p.code_phase, p.doppler_bin),
                                          settings_.nulled_dimensions);
        out.push_back(std::move(c));
    }
    return out;
}

std::optional<SignalCandidate> acquire_baseline(const ReceiveStream& stream, const SpreadingCode& code,
                                                const AcquisitionSettings& settings) {
    return AcquisitionEngine(stream, settings).acquire_baseline(code.prn);
}

std::vector<SignalCandidate> acquire_peaks(const ReceiveStream& stream, const SpreadingCode& code,
                                           const AcquisitionSettings& settings) {
    return AcquisitionEngine(stream, settings).acquire_peaks(code.prn);
}

void write_caf_csv(std::ostream& out, const CafGrid& grid) {
    out << "code_phase,doppler_hz,value\n";
    for (Eigen::Index l = 0; l < grid.values.rows(); ++l) {
        for (int bin = 0; bin < grid.values.cols(); ++bin) {
            out << l << ',' << doppler_hz(bin) << ',' << grid.values(l, bin) << '\n';
        }
    }
}

}  // namespace schieber
