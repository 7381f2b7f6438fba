//! Rotating-frame Hamiltonian, spontaneous-emission jump operators and the
//! Lindblad superoperator for a single probe polarization, plus its steady
//! state.
//!
//! All frequencies are angular, in units of 2pi x MHz (rad/us).
//!
//! Vectorization is column stacking: `vec(rho)[a + b*d] = rho[(a, b)]`, which is
//! also nalgebra's storage order, so `vec(A X B) = (B^T (x) A) vec(X)`.

use nalgebra::{DMatrix, DVector};

use crate::atomic::{cg, HalfInt, LevelBasis, Manifold, Polarization};
use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Linear MHz to angular 2pi x MHz.
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f
}

/// Relative singular gap below which the stationary state is considered
/// non-unique.
pub const DEGENERACY_TOLERANCE: f64 = 1e-7;

/// Laser, field and decay parameters for one steady-state solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    /// Pump component coupling S(F=I-1/2) -> P.
    pub omega_pi_1: f64,
    /// Pump component coupling S(F=I+1/2) -> P.
    pub omega_pi_2: f64,
    pub omega_sigma_plus: f64,
    pub omega_sigma_minus: f64,
    /// Pump detunings from the m=0 <-> m=0 reference transitions.
    pub delta_pi_1: f64,
    pub delta_pi_2: f64,
    /// Probe detuning, shared by both probe polarizations.
    pub delta_sigma: f64,
    /// Zeeman splittings per unit m.
    pub zeeman_s_lower: f64,
    pub zeeman_s_upper: f64,
    pub zeeman_p: f64,
    pub gamma_natural: f64,
    /// P1/2 -> S1/2 branching ratio.
    pub branching_s: f64,
}

impl Default for DriveConfig {
    /// 137Ba+ constants, all lasers off.
    fn default() -> Self {
        DriveConfig {
            omega_pi_1: 0.0,
            omega_pi_2: 0.0,
            omega_sigma_plus: 0.0,
            omega_sigma_minus: 0.0,
            delta_pi_1: 0.0,
            delta_pi_2: 0.0,
            delta_sigma: 0.0,
            zeeman_s_lower: mhz(-4.7),
            zeeman_s_upper: mhz(4.7),
            zeeman_p: mhz(1.57),
            gamma_natural: mhz(20.1),
            branching_s: 0.732,
        }
    }
}

impl DriveConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.omega_pi_1,
            self.omega_pi_2,
            self.omega_sigma_plus,
            self.omega_sigma_minus,
            self.delta_pi_1,
            self.delta_pi_2,
            self.delta_sigma,
            self.zeeman_s_lower,
            self.zeeman_s_upper,
            self.zeeman_p,
            self.gamma_natural,
            self.branching_s,
        ];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        let rabis = [
            self.omega_pi_1,
            self.omega_pi_2,
            self.omega_sigma_plus,
            self.omega_sigma_minus,
        ];
        if rabis.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidConfig("Rabi frequencies must be >= 0".into()));
        }
        if self.gamma_natural <= 0.0 {
            return Err(Error::InvalidConfig("natural linewidth must be > 0".into()));
        }
        if !(self.branching_s > 0.0 && self.branching_s <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "branching ratio {} outside (0, 1]",
                self.branching_s
            )));
        }
        Ok(())
    }

    /// Total P -> S decay rate, branching_s x gamma_natural.
    pub fn gamma_effective(&self) -> f64 {
        self.branching_s * self.gamma_natural
    }

    pub fn with_probe_detuning(mut self, delta: f64) -> Self {
        self.delta_sigma = delta;
        self
    }

    fn probe_rabi(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::SigmaPlus => self.omega_sigma_plus,
            Polarization::SigmaMinus => self.omega_sigma_minus,
            Polarization::Pi => 0.0,
        }
    }

    fn zeeman(&self, manifold: Manifold) -> f64 {
        match manifold {
            Manifold::SLower => self.zeeman_s_lower,
            Manifold::SUpper => self.zeeman_s_upper,
            Manifold::PUpper => self.zeeman_p,
        }
    }
}

/// Dense Hermitian Hamiltonian in basis order, 2pi x MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix(DMatrix<C64>);

impl HamiltonianMatrix {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm()
    }
}

/// Rotating-frame Hamiltonian with the probe restricted to one circular
/// polarization.
///
/// The frame puts |P, F=I+1/2, m=0> at zero energy. For probe polarization q
/// each level is shifted by `q m (delta_pi_2 - delta_sigma)` on top of its
/// Zeeman energy, which makes every coupling time independent; q = -1 is the
/// mirror image of q = +1 under m -> -m with the Zeeman splittings negated.
pub fn build_hamiltonian(
    basis: &LevelBasis,
    cfg: &DriveConfig,
    probe: Polarization,
) -> Result<HamiltonianMatrix> {
    if probe == Polarization::Pi {
        return Err(Error::Unsupported(
            "probe must be sigma+ or sigma-; a pi-polarized probe is not modeled".into(),
        ));
    }
    cfg.validate()?;
    let d = basis.dim();
    let q = f64::from(probe.q());
    let frame = q * (cfg.delta_pi_2 - cfg.delta_sigma);
    let mut h = DMatrix::<C64>::zeros(d, d);

    for (i, level) in basis.levels().iter().enumerate() {
        let m = level.m.value();
        let offset = match level.manifold {
            Manifold::SLower => cfg.delta_pi_1,
            Manifold::SUpper => cfg.delta_pi_2,
            Manifold::PUpper => 0.0,
        };
        h[(i, i)] = C64::new(offset + m * (frame + cfg.zeeman(level.manifold)), 0.0);
    }

    let f_up = basis.spin().f_upper();
    let probe_rabi = cfg.probe_rabi(probe);
    let step = HalfInt::from_int(probe.q());
    for (i, level) in basis.levels().iter().enumerate() {
        let pump = match level.manifold {
            Manifold::SLower => cfg.omega_pi_1,
            Manifold::SUpper => cfg.omega_pi_2,
            Manifold::PUpper => continue,
        };
        if let Some(p) = basis.index_of(Manifold::PUpper, level.m) {
            let v = 0.5 * pump * cg(level.f, level.m, f_up, level.m)?;
            couple(&mut h, i, p, v);
        }
        if level.manifold == Manifold::SUpper {
            let m_p = level.m + step;
            if let Some(p) = basis.index_of(Manifold::PUpper, m_p) {
                let v = 0.5 * probe_rabi * cg(level.f, level.m, f_up, m_p)?;
                couple(&mut h, i, p, v);
            }
        }
    }
    Ok(HamiltonianMatrix(h))
}

fn couple(h: &mut DMatrix<C64>, i: usize, j: usize, v: f64) {
    if v != 0.0 {
        h[(i, j)] += C64::new(v, 0.0);
        h[(j, i)] += C64::new(v, 0.0);
    }
}

/// One decay channel L = sqrt(rate) |to><from|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JumpOperatorSet {
    pub jumps: Vec<Jump>,
}

impl JumpOperatorSet {
    /// Summed decay rate out of level `from`.
    pub fn total_from(&self, from: usize) -> f64 {
        self.jumps
            .iter()
            .filter(|j| j.from == from)
            .map(|j| j.rate)
            .sum()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.jumps
            .iter()
            .filter(|j| j.from == from && j.to == to)
            .map(|j| j.rate)
            .sum()
    }
}

/// Spontaneous emission P -> S with rates proportional to squared CG
/// coefficients, normalized so each P level decays at `branching_s *
/// gamma_natural`.
pub fn build_jump_operators(basis: &LevelBasis, cfg: &DriveConfig) -> Result<JumpOperatorSet> {
    cfg.validate()?;
    let total = cfg.gamma_effective();
    let mut jumps = Vec::new();
    for p in basis.indices_in(Manifold::PUpper) {
        let upper = basis.level(p);
        let mut weights = Vec::new();
        for (s, lower) in basis.levels().iter().enumerate() {
            if !lower.manifold.is_ground() || (upper.m - lower.m).twice().abs() > 2 {
                continue;
            }
            let c = cg(lower.f, lower.m, upper.f, upper.m)?;
            if c != 0.0 {
                weights.push((s, c * c));
            }
        }
        let norm: f64 = weights.iter().map(|(_, w)| w).sum();
        jumps.extend(weights.into_iter().map(|(s, w)| Jump {
            from: p,
            to: s,
            rate: total * w / norm,
        }));
    }
    Ok(JumpOperatorSet { jumps })
}

/// Lindblad generator acting on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    dim: usize,
    matrix: DMatrix<C64>,
}

pub fn assemble_liouvillian(h: &HamiltonianMatrix, jumps: &JumpOperatorSet) -> Result<Liouvillian> {
    let d = h.dim();
    if let Some(j) = jumps.jumps.iter().find(|j| j.from >= d || j.to >= d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: j.from.max(j.to) + 1,
        });
    }
    let idx = |a: usize, b: usize| a + b * d;
    let hm = h.matrix();
    let mut l = DMatrix::<C64>::zeros(d * d, d * d);
    let i = C64::i();
    // -i [H, rho]
    for a in 0..d {
        for b in 0..d {
            let row = idx(a, b);
            for k in 0..d {
                let hak = hm[(a, k)];
                if hak != C64::default() {
                    l[(row, idx(k, b))] -= i * hak;
                }
                let hkb = hm[(k, b)];
                if hkb != C64::default() {
                    l[(row, idx(a, k))] += i * hkb;
                }
            }
        }
    }
    // L rho L^dag - {L^dag L, rho}/2 with L = sqrt(g)|to><from|
    for jump in &jumps.jumps {
        let (s, p, g) = (jump.to, jump.from, jump.rate);
        l[(idx(s, s), idx(p, p))] += C64::new(g, 0.0);
        for k in 0..d {
            l[(idx(p, k), idx(p, k))] -= C64::new(0.5 * g, 0.0);
            l[(idx(k, p), idx(k, p))] -= C64::new(0.5 * g, 0.0);
        }
    }
    Ok(Liouvillian { dim: d, matrix: l })
}

pub fn vectorize(rho: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, d: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

impl Liouvillian {
    /// Wraps an arbitrary d^2 x d^2 generator.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if matrix.ncols() != n || d * d != n {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: n,
            });
        }
        Ok(Liouvillian { dim: d, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// d rho / dt for the given state.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }

    /// Classic fixed-step RK4 on vec(rho).
    pub fn evolve_rk4(&self, rho0: &DMatrix<C64>, dt: f64, steps: usize) -> DMatrix<C64> {
        let l = &self.matrix;
        let mut v = vectorize(rho0);
        let dt_c = C64::new(dt, 0.0);
        for _ in 0..steps {
            let k1 = l * &v;
            let k2 = l * (&v + &k1 * (dt_c * 0.5));
            let k3 = l * (&v + &k2 * (dt_c * 0.5));
            let k4 = l * (&v + &k3 * dt_c);
            v += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (dt_c / 6.0);
        }
        unvectorize(&v, self.dim)
    }
}

/// Hermitian, unit-trace density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

impl DensityMatrix {
    /// Hermitizes and normalizes `m`.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let tr = herm.trace().re;
        if !tr.is_finite() || tr.abs() < f64::EPSILON {
            return Err(Error::Numeric(format!("density matrix trace {tr}")));
        }
        Ok(DensityMatrix(herm / C64::new(tr, 0.0)))
    }

    pub fn pure(d: usize, index: usize) -> Self {
        let mut m = DMatrix::zeros(d, d);
        m[(index, index)] = C64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix(DMatrix::identity(d, d) / C64::new(d as f64, 0.0))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Stationary state of `l`.
///
/// One population row of L is replaced by the trace functional and the
/// resulting linear system is solved with a unit right-hand side in that row.
/// Since population rows of a trace-preserving generator sum to zero the
/// replaced row carries no information. The solution is then Hermitized and
/// renormalized.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let d = l.dim;
    let n = d * d;
    let norm = l.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::MultipleSteadyStates { gap: 0.0 });
    }
    let scale = norm / d as f64;
    let mut a = l.matrix.clone();
    for col in 0..n {
        a[(0, col)] = C64::default();
    }
    for k in 0..d {
        a[(0, k + k * d)] = C64::new(scale, 0.0);
    }
    let mut rhs = DVector::<C64>::zeros(n);
    rhs[0] = C64::new(scale, 0.0);

    let lu = a.lu();
    let x = lu
        .solve(&rhs)
        .ok_or(Error::MultipleSteadyStates { gap: 0.0 })?;

    let gap = smallest_eigenvalue_estimate(&lu, n) / norm;
    if gap < DEGENERACY_TOLERANCE {
        return Err(Error::MultipleSteadyStates { gap });
    }

    let rho = DensityMatrix::from_matrix(unvectorize(&x, d))?;
    let residual = (&l.matrix * vectorize(rho.matrix())).norm();
    if !(residual <= 1e-9 * norm) {
        return Err(Error::Numeric(format!(
            "steady-state residual {residual:.3e} exceeds 1e-9 |L|_F = {:.3e}",
            1e-9 * norm
        )));
    }
    Ok(rho)
}

/// Inverse power iteration on the already-factored bordered matrix. A second
/// stationary state makes the bordered matrix singular, so its smallest
/// eigenvalue collapses.
fn smallest_eigenvalue_estimate(
    lu: &nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
) -> f64 {
    let mut v = DVector::<C64>::from_fn(n, |i, _| {
        let t = i as f64 + 1.0;
        C64::new((0.7 * t).sin() + 1.1, (1.3 * t).cos())
    });
    v /= C64::new(v.norm(), 0.0);
    let mut growth = 0.0;
    for _ in 0..6 {
        match lu.solve(&v) {
            Some(w) => {
                growth = w.norm();
                if !growth.is_finite() || growth == 0.0 {
                    return 0.0;
                }
                v = w / C64::new(growth, 0.0);
            }
            None => return 0.0,
        }
    }
    1.0 / growth
}
