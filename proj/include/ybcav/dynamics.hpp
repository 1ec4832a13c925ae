#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <complex>
#include <string>
#include <unsupported/Eigen/KroneckerProduct>
#include <vector>

#include "ybcav/atomic.hpp"
#include "ybcav/lightshift.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

using Complex = std::complex<double>;
using SparseOp = Eigen::SparseMatrix<Complex>;
using DenseOp = Eigen::MatrixXcd;

/// Two-mode cavity and detection chain. Rates are angular frequencies; kappa
/// and gamma are half widths (amplitude decay rates).
struct CavityParams {
  double g0 = mhz(2.8);
  double kappa = mhz(4.8);
  double gamma = mhz(0.091);
  double mode_waist = micrometers(19.0);
  double detection_efficiency = 0.20;
  double dark_rate_sigma_plus = 1.0e3;   // counts/s
  double dark_rate_sigma_minus = 0.5e3;  // counts/s

  void validate() const {
    require(std::isfinite(g0) && g0 > 0.0, "g0 must be positive");
    require(std::isfinite(kappa) && kappa > 0.0, "kappa must be positive");
    require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
    require(std::isfinite(mode_waist) && mode_waist > 0.0, "mode waist must be positive");
    require(detection_efficiency >= 0.0 && detection_efficiency <= 1.0, "detection efficiency must lie in [0, 1]");
    require(dark_rate_sigma_plus >= 0.0 && dark_rate_sigma_minus >= 0.0, "dark rates must be nonnegative");
  }

  /// TEM00 coupling at a point; the standing wave along z is not resolved.
  double coupling_at(const Vec3& p) const {
    const double w2 = mode_waist * mode_waist;
    return g0 * std::exp(-(p.x * p.x + p.y * p.y) / w2);
  }

  double cooperativity() const { return g0 * g0 / (kappa * gamma); }
};

// ---------------------------------------------------------------------------
// Hilbert space: {up, down, 3P1 m'=+3/2, +1/2, -1/2, -3/2} x Fock(sigma+) x
// Fock(sigma-), each mode truncated at n_max photons.

inline constexpr int kAtomLevels = 6;
inline constexpr int kLevelUp = 0;
inline constexpr int kLevelDown = 1;

constexpr int ground_level(Spin s) { return s == Spin::up ? kLevelUp : kLevelDown; }
constexpr bool is_excited_level(int level) { return level >= 2 && level < kAtomLevels; }

/// m quantum number of an atomic basis level.
constexpr HalfInt level_m(int level) {
  constexpr std::array<int, kAtomLevels> twice_m{1, -1, 3, 1, -1, -3};
  return half(twice_m[static_cast<std::size_t>(level)]);
}

enum class Mode { sigma_plus, sigma_minus };

struct ModelDims {
  int n_max = 2;

  int fock() const { return n_max + 1; }
  int dim() const { return kAtomLevels * fock() * fock(); }
  int index(int level, int n_plus, int n_minus) const { return (level * fock() + n_plus) * fock() + n_minus; }

  void validate() const {
    if (n_max < 1) throw ModelError("Fock truncation n_max must be at least 1");
  }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

namespace detail {

using Triplet = Eigen::Triplet<Complex>;

inline SparseOp sparse_identity(int n) {
  SparseOp id(n, n);
  id.setIdentity();
  return id;
}

inline SparseOp atom_projector(int row, int col) {
  SparseOp op(kAtomLevels, kAtomLevels);
  op.insert(row, col) = 1.0;
  return op;
}

inline SparseOp annihilation(int fock) {
  SparseOp a(fock, fock);
  for (int n = 1; n < fock; ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

// atom (x) mode+ (x) mode-
inline SparseOp embed(const SparseOp& atom, const SparseOp& plus, const SparseOp& minus) {
  SparseOp field = Eigen::kroneckerProduct(plus, minus).eval();
  return Eigen::kroneckerProduct(atom, field).eval();
}

inline SparseOp mode_annihilation(const ModelDims& d, Mode m) {
  const SparseOp id_atom = sparse_identity(kAtomLevels);
  const SparseOp id_f = sparse_identity(d.fock());
  const SparseOp a = annihilation(d.fock());
  return m == Mode::sigma_plus ? embed(id_atom, a, id_f) : embed(id_atom, id_f, a);
}

inline SparseOp atom_operator(const ModelDims& d, const SparseOp& atom) {
  const SparseOp id_f = sparse_identity(d.fock());
  return embed(atom, id_f, id_f);
}

}  // namespace detail

/// Amplitudes of the sigma+, pi, sigma- components of a beam polarization.
struct PolarizationAmplitudes {
  double sigma_plus = 0.0;
  double pi = 0.0;
  double sigma_minus = 0.0;

  double of(int q) const { return q > 0 ? sigma_plus : (q < 0 ? sigma_minus : pi); }
};

inline PolarizationAmplitudes polarization_amplitudes(BeamPolarization p) {
  switch (p) {
    case BeamPolarization::pi: return {0.0, 1.0, 0.0};
    case BeamPolarization::sigma_plus: return {1.0, 0.0, 0.0};
    case BeamPolarization::sigma_minus: return {0.0, 0.0, 1.0};
    case BeamPolarization::linear_y: return {1.0 / std::numbers::sqrt2, 0.0, 1.0 / std::numbers::sqrt2};
  }
  return {};
}

/// Two-level saturation intensity pi h c Gamma / (3 lambda^3) of the
/// 556 nm line, with Gamma = 2 gamma_p1 the full natural linewidth.
inline double intercombination_saturation_intensity(const LevelScheme& scheme) {
  const double lambda = kIntercombinationWavelength;
  return pi * planck * speed_of_light * (2.0 * scheme.gamma_p1) / (3.0 * lambda * lambda * lambda);
}

/// Rabi frequency of the excitation beam on a unit-weight (cyclic)
/// transition, for the full beam intensity at `p`.
inline double excitation_rabi(const BeamParams& drive, const LevelScheme& scheme, const Vec3& p) {
  const double intensity = beam_intensity(beam_radial_offset(p, drive), drive);
  const double isat = intercombination_saturation_intensity(scheme);
  return 2.0 * scheme.gamma_p1 * std::sqrt(intensity / (2.0 * isat));
}

struct Hamiltonian {
  ModelDims dims;
  SparseOp op;
};

/// Rotating-frame Hamiltonian at the excitation laser frequency. The cavity
/// is held resonant with the laser. `excitation_detuning` is laser minus the
/// unshifted 1S0 - 3P1(F'=3/2) resonance; drive.detuning is not used.
inline Hamiltonian build_hamiltonian(const LevelScheme& scheme, const CavityParams& cavity, const BeamParams& drive,
                                     const ShiftResult& shifts, double excitation_detuning, const Vec3& position,
                                     const ModelDims& dims = {}) {
  dims.validate();
  cavity.validate();
  drive.validate();

  const double g = cavity.coupling_at(position);
  const double omega = excitation_rabi(drive, scheme, position);
  const auto amp = polarization_amplitudes(drive.polarization);

  SparseOp atom_static(kAtomLevels, kAtomLevels);
  SparseOp h = SparseOp(dims.dim(), dims.dim());
  const SparseOp a_plus = detail::mode_annihilation(dims, Mode::sigma_plus);
  const SparseOp a_minus = detail::mode_annihilation(dims, Mode::sigma_minus);

  for (int e = 2; e < kAtomLevels; ++e) {
    const double detuning = excitation_detuning - shifts.of(level_m(e));
    atom_static.coeffRef(e, e) += -detuning;
    for (int gl : {kLevelUp, kLevelDown}) {
      const double c = coupling_amplitude(level_m(gl), level_m(e));
      if (c == 0.0) continue;
      const int q = (level_m(e) - level_m(gl)).twice() / 2;
      const double drive_coupling = 0.5 * omega * amp.of(q) * c;
      if (drive_coupling != 0.0) {
        atom_static.coeffRef(e, gl) += drive_coupling;
        atom_static.coeffRef(gl, e) += drive_coupling;
      }
      if (q == 0 || g == 0.0) continue;
      const SparseOp& a = q > 0 ? a_plus : a_minus;
      const SparseOp raise = detail::atom_operator(dims, detail::atom_projector(e, gl));
      const SparseOp jc = (g * c) * (raise * a);
      h += jc;
      h += SparseOp(jc.adjoint());
    }
  }
  h += detail::atom_operator(dims, atom_static);
  h.prune(Complex(0.0));
  if (h.rows() != dims.dim() || h.cols() != dims.dim()) throw ModelError("Hamiltonian dimension mismatch");
  return {dims, h};
}

/// Lindblad generator acting on column-stacked density matrices.
struct Generator {
  ModelDims dims;
  SparseOp op;
  double rate_scale = 1.0;  // largest |entry|, used to nondimensionalize solvers
};

namespace detail {

inline void add_dissipator(SparseOp& l, const SparseOp& c, const SparseOp& id) {
  const SparseOp cdc = (SparseOp(c.adjoint()) * c).eval();
  const SparseOp cdc_t = SparseOp(cdc.transpose());
  l += SparseOp(Eigen::kroneckerProduct(SparseOp(c.conjugate()), c));
  l -= 0.5 * SparseOp(Eigen::kroneckerProduct(id, cdc));
  l -= 0.5 * SparseOp(Eigen::kroneckerProduct(cdc_t, id));
}

}  // namespace detail

/// Collapse channels: each cavity mode at 2 kappa; 3P1 free-space decay at
/// 2 gamma, one coherent channel per emitted polarization weighted by the
/// Clebsch-Gordan amplitudes.
inline Generator build_lindblad(const Hamiltonian& h, const LevelScheme& scheme, const CavityParams& cavity) {
  (void)scheme;
  cavity.validate();
  const ModelDims& d = h.dims;
  const int n = d.dim();
  if (h.op.rows() != n || h.op.cols() != n) throw ModelError("Hamiltonian does not match model dimensions");

  const SparseOp id = detail::sparse_identity(n);
  const Complex i(0.0, 1.0);
  SparseOp l = (-i) * SparseOp(Eigen::kroneckerProduct(id, h.op));
  l += i * SparseOp(Eigen::kroneckerProduct(SparseOp(h.op.transpose()), id));

  for (Mode m : {Mode::sigma_plus, Mode::sigma_minus}) {
    const SparseOp c = std::sqrt(2.0 * cavity.kappa) * detail::mode_annihilation(d, m);
    detail::add_dissipator(l, c, id);
  }
  for (int q : {-1, 0, 1}) {
    SparseOp atom(kAtomLevels, kAtomLevels);
    for (int e = 2; e < kAtomLevels; ++e) {
      for (int gl : {kLevelUp, kLevelDown}) {
        if ((level_m(e) - level_m(gl)).twice() != 2 * q) continue;
        const double c = coupling_amplitude(level_m(gl), level_m(e));
        if (c != 0.0) atom.insert(gl, e) = std::sqrt(2.0 * cavity.gamma) * c;
      }
    }
    if (atom.nonZeros() == 0) continue;
    detail::add_dissipator(l, detail::atom_operator(d, atom), id);
  }
  l.prune(Complex(0.0));
  l.makeCompressed();

  double scale = 0.0;
  for (int k = 0; k < l.outerSize(); ++k)
    for (SparseOp::InnerIterator it(l, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  return {d, l, scale > 0.0 ? scale : 1.0};
}

/// Density matrix of the atom + two-mode field.
struct SystemState {
  ModelDims dims;
  DenseOp rho;

  static SystemState basis(const ModelDims& d, int level, int n_plus, int n_minus) {
    d.validate();
    SystemState s{d, DenseOp::Zero(d.dim(), d.dim())};
    const int k = d.index(level, n_plus, n_minus);
    s.rho(k, k) = 1.0;
    return s;
  }

  Complex trace() const { return rho.trace(); }
  double hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

  double min_eigenvalue() const {
    const DenseOp herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<DenseOp> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  double photon_number(Mode m) const {
    double total = 0.0;
    for (int a = 0; a < kAtomLevels; ++a)
      for (int np = 0; np < dims.fock(); ++np)
        for (int nm = 0; nm < dims.fock(); ++nm) {
          const int k = dims.index(a, np, nm);
          total += (m == Mode::sigma_plus ? np : nm) * rho(k, k).real();
        }
    return total;
  }

  double level_population(int level) const {
    double total = 0.0;
    for (int np = 0; np < dims.fock(); ++np)
      for (int nm = 0; nm < dims.fock(); ++nm) {
        const int k = dims.index(level, np, nm);
        total += rho(k, k).real();
      }
    return total;
  }

  void validate(double herm_tol = 1e-10, double trace_tol = 1e-10, double eig_floor = -1e-8) const {
    if (rho.rows() != dims.dim() || rho.cols() != dims.dim()) throw ModelError("density matrix dimension mismatch");
    if (hermiticity_error() > herm_tol) throw NumericalError("density matrix is not Hermitian");
    if (std::abs(trace() - Complex(1.0)) > trace_tol) throw NumericalError("density matrix trace is not 1");
    if (min_eigenvalue() < eig_floor) throw NumericalError("density matrix has a negative eigenvalue");
  }
};

/// Output photon flux 2 kappa <n> of each mode, photons/s.
inline std::array<double, 2> photon_flux(const SystemState& s, const CavityParams& cavity) {
  return {2.0 * cavity.kappa * s.photon_number(Mode::sigma_plus),
          2.0 * cavity.kappa * s.photon_number(Mode::sigma_minus)};
}

/// Max-norm of L(rho) in units of the generator's rate scale.
inline double generator_residual(const Generator& gen, const SystemState& s) {
  const Eigen::Map<const Eigen::VectorXcd> v(s.rho.data(), s.rho.size());
  const Eigen::VectorXcd r = gen.op * v;
  return r.cwiseAbs().maxCoeff() / gen.rate_scale;
}

struct EvolveOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  std::size_t max_steps = 2'000'000;
};

/// Propagates rho0 for time t (seconds) under the generator with an adaptive
/// Dormand-Prince integrator. No renormalization is applied.
inline SystemState evolve(const SystemState& rho0, const Generator& gen, double t, const EvolveOptions& opts = {}) {
  namespace ode = boost::numeric::odeint;
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("evolution time must be finite and nonnegative");
  if (!(rho0.dims == gen.dims)) throw ModelError("state and generator dimensions differ");
  if (t == 0.0) return rho0;

  const auto n = static_cast<std::size_t>(rho0.rho.size());
  using state_type = std::vector<Complex>;
  state_type x(rho0.rho.data(), rho0.rho.data() + n);
  const SparseOp scaled = gen.op / gen.rate_scale;

  auto rhs = [&](const state_type& in, state_type& out, double /*tau*/) {
    out.resize(in.size());
    const Eigen::Map<const Eigen::VectorXcd> vi(in.data(), static_cast<Eigen::Index>(in.size()));
    Eigen::Map<Eigen::VectorXcd> vo(out.data(), static_cast<Eigen::Index>(out.size()));
    vo.noalias() = scaled * vi;
  };

  const double tau_end = t * gen.rate_scale;
  auto stepper = ode::make_controlled(opts.abs_tol, opts.rel_tol, ode::runge_kutta_dopri5<state_type>());
  double tau = 0.0;
  double dtau = std::min(0.01, tau_end);
  std::size_t steps = 0;
  std::size_t rejections = 0;
  while (tau < tau_end) {
    if (steps >= opts.max_steps) throw NumericalError("evolve exceeded its step budget");
    dtau = std::min(dtau, tau_end - tau);
    if (stepper.try_step(rhs, x, tau, dtau) == ode::success) {
      ++steps;
      rejections = 0;
    } else if (++rejections > 500 || dtau < 1e-14 * std::max(1.0, tau)) {
      throw NumericalError("step-size underflow in evolve");
    }
  }
  for (const auto& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericalError("evolve produced non-finite values");

  SystemState out{rho0.dims, DenseOp(rho0.rho.rows(), rho0.rho.cols())};
  std::copy(x.begin(), x.end(), out.rho.data());
  return out;
}

struct SteadyStateOptions {
  double residual_tol = 1e-9;
  // Degenerate generators fall back to relaxing the reference state; this
  // bounds that relaxation in units of 1/rate_scale.
  double max_relaxation_time = 1e7;
};

namespace detail {

inline bool solve_unique_steady_state(const Generator& gen, SystemState& out) {
  const int dim = gen.dims.dim();
  const Eigen::Index n = static_cast<Eigen::Index>(dim) * dim;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(gen.op.nonZeros() + dim));
  for (int k = 0; k < gen.op.outerSize(); ++k)
    for (SparseOp::InnerIterator it(gen.op, k); it; ++it)
      if (it.row() != 0) t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value() / gen.rate_scale);
  for (int i = 0; i < dim; ++i) t.emplace_back(0, i * dim + i, 1.0);
  SparseOp a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();

  Eigen::SparseLU<SparseOp, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) return false;
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n);
  b(0) = 1.0;
  const Eigen::VectorXcd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) return false;

  out.dims = gen.dims;
  out.rho = Eigen::Map<const DenseOp>(x.data(), dim, dim);
  out.rho = 0.5 * (out.rho + out.rho.adjoint()).eval();
  out.rho /= out.rho.trace();
  return true;
}

}  // namespace detail

/// Stationary state of a generator with a unique fixed point.
inline SystemState steady_state(const Generator& gen, const SteadyStateOptions& opts = {}) {
  SystemState s;
  if (!detail::solve_unique_steady_state(gen, s))
    throw NumericalError("generator has no unique steady state; supply a reference state");
  const double res = generator_residual(gen, s);
  if (res > opts.residual_tol)
    throw NumericalError("steady state did not converge, residual " + std::to_string(res));
  return s;
}

/// Stationary state; when the stationary manifold is degenerate (no drive,
/// spin sectors uncoupled) the reference state is relaxed onto it, which
/// keeps its conserved ground-sector populations.
inline SystemState steady_state(const Generator& gen, const SystemState& reference,
                                const SteadyStateOptions& opts = {}) {
  SystemState s;
  if (detail::solve_unique_steady_state(gen, s)) {
    const double res = generator_residual(gen, s);
    if (res <= opts.residual_tol) return s;
  }
  s = reference;
  double elapsed = 0.0;
  double chunk = 100.0;
  while (elapsed < opts.max_relaxation_time) {
    s = evolve(s, gen, chunk / gen.rate_scale, {1e-13, 1e-11, 2'000'000});
    elapsed += chunk;
    const double res = generator_residual(gen, s);
    if (res <= opts.residual_tol) {
      s.rho = 0.5 * (s.rho + s.rho.adjoint()).eval();
      s.rho /= s.rho.trace();
      return s;
    }
    chunk *= 2.0;
  }
  throw NumericalError("relaxation onto the degenerate steady state did not converge, residual " +
                       std::to_string(generator_residual(gen, s)));
}

namespace detail {

// coupling_weight for every (ground level, excited level) pair of the basis.
inline const std::array<std::array<double, kAtomLevels>, 2>& weight_table() {
  static const auto table = [] {
    std::array<std::array<double, kAtomLevels>, 2> t{};
    for (int gl : {kLevelUp, kLevelDown})
      for (int e = 2; e < kAtomLevels; ++e)
        t[static_cast<std::size_t>(gl)][static_cast<std::size_t>(e)] = coupling_weight(level_m(gl), level_m(e));
    return t;
  }();
  return table;
}

}  // namespace detail

/// Effective per-spin rates after eliminating the cavity fields.
struct EmissionRates {
  double rate_sigma_plus = 0.0;   // photons/s leaving the sigma+ mode
  double rate_sigma_minus = 0.0;  // photons/s leaving the sigma- mode
  double spin_flip_rate = 0.0;    // 1/s
  double free_space_rate = 0.0;   // photons/s scattered outside the cavity
  double excited_population = 0.0;
  bool regime_warning = false;    // g(position) > kappa: bad-cavity elimination is marginal

  double rate(Polarization p) const { return p == Polarization::sigma_plus ? rate_sigma_plus : rate_sigma_minus; }
  double total_scattering() const { return rate_sigma_plus + rate_sigma_minus + free_space_rate; }
};

/// Bad-cavity adiabatic elimination with the cavity locked to the laser.
///
/// Each 3P1 sublevel e reached from the spin's ground state by the drive is
/// an effective two-level system with Rabi frequency Omega eps_q c_ge,
/// amplitude decay Gamma_e = gamma + sum_modes g^2 c^2 / kappa and detuning
/// Delta - delta_e. The sublevels share the ground population through rate
/// equations, which reproduce the saturated two-level solution exactly when a
/// single sublevel is driven. Each cavity channel radiates 2 g^2 c^2 / kappa
/// per unit excited population.
inline EmissionRates adiabatic_rates(Spin spin, double excitation_detuning, const Vec3& position,
                                     const ShiftResult& shifts, const LevelScheme& scheme,
                                     const CavityParams& cavity, const BeamParams& drive) {
  const double g = cavity.coupling_at(position);
  const double g2_over_kappa = g * g / cavity.kappa;
  const double omega = excitation_rabi(drive, scheme, position);
  const auto amp = polarization_amplitudes(drive.polarization);
  const HalfInt mg = ground_m(spin);
  const auto& weights = detail::weight_table();

  struct Branch {
    double ratio = 0.0;  // rho_e / rho_g
    double plus = 0.0, minus = 0.0, flip = 0.0;
  };
  std::array<Branch, 4> branches{};
  double ratio_sum = 0.0;

  for (int e = 2; e < kAtomLevels; ++e) {
    const HalfInt me = level_m(e);
    const double w = weights[static_cast<std::size_t>(ground_level(spin))][static_cast<std::size_t>(e)];
    if (w == 0.0) continue;
    const int q = (me - mg).twice() / 2;
    const double eps = amp.of(q);
    if (eps == 0.0) continue;

    Branch b;
    double cavity_decay = 0.0;
    for (int gl : {kLevelUp, kLevelDown}) {
      const double wo = weights[static_cast<std::size_t>(gl)][static_cast<std::size_t>(e)];
      if (wo == 0.0) continue;
      const int qo = (me - level_m(gl)).twice() / 2;
      const bool other = level_m(gl) != mg;
      if (other) b.flip += 2.0 * cavity.gamma * wo;
      if (qo == 0) continue;
      const double r = 2.0 * g2_over_kappa * wo;
      cavity_decay += r;
      (qo > 0 ? b.plus : b.minus) += r;
      if (other) b.flip += r;
    }
    const double gamma_e = cavity.gamma + 0.5 * cavity_decay;
    const double delta = excitation_detuning - shifts.of(me);
    const double omega_e2 = omega * omega * eps * eps * w;
    const double pump = omega_e2 * gamma_e / (2.0 * (delta * delta + gamma_e * gamma_e));
    b.ratio = pump / (2.0 * gamma_e + pump);
    ratio_sum += b.ratio;
    branches[static_cast<std::size_t>(e - 2)] = b;
  }

  EmissionRates out;
  const double rho_g = 1.0 / (1.0 + ratio_sum);
  for (const auto& b : branches) {
    const double pe = rho_g * b.ratio;
    out.excited_population += pe;
    out.rate_sigma_plus += pe * b.plus;
    out.rate_sigma_minus += pe * b.minus;
    out.spin_flip_rate += pe * b.flip;
    out.free_space_rate += pe * 2.0 * cavity.gamma;
  }
  out.regime_warning = g > cavity.kappa;
  return out;
}

struct FockConvergence {
  std::array<double, 2> flux_coarse{};
  std::array<double, 2> flux_fine{};
  double relative_change = 0.0;
  bool converged = false;
};

/// Steady-state photon flux at n_max and 2 n_max.
inline FockConvergence check_fock_truncation(const LevelScheme& scheme, const CavityParams& cavity,
                                             const BeamParams& drive, const ShiftResult& shifts,
                                             double excitation_detuning, const Vec3& position, int n_max,
                                             double tol = 1e-3) {
  auto flux_at = [&](int n) {
    const ModelDims d{n};
    const auto h = build_hamiltonian(scheme, cavity, drive, shifts, excitation_detuning, position, d);
    return photon_flux(steady_state(build_lindblad(h, scheme, cavity)), cavity);
  };
  FockConvergence out;
  out.flux_coarse = flux_at(n_max);
  out.flux_fine = flux_at(2 * n_max);
  for (int k = 0; k < 2; ++k) {
    const double ref = std::max(std::abs(out.flux_fine[k]), 1e-300);
    out.relative_change = std::max(out.relative_change, std::abs(out.flux_coarse[k] - out.flux_fine[k]) / ref);
  }
  out.converged = out.relative_change <= tol;
  return out;
}

}  // namespace ybcav
