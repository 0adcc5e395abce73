//! Distributions, characteristic functions, and signed-power functionals.
//!
//! The numeric pipeline needs three ingredients from a random variable `X`:
//!
//! 1. exact finite discrete distributions (atoms with probabilities) with
//!    exact moment/tail arithmetic — the ground-truth side;
//! 2. characteristic functions `f(t) = E e^{itX}` with derivatives up to
//!    order three, for point sets, standardized iid sums `S/sqrt(n)`, and the
//!    standard normal — the transform side;
//! 3. the signed-power functionals of order `k`
//!
//!    ```text
//!    L_X(x) = x^k ( P(X>x) 1{x>0} - P(X<x) 1{x<0} )
//!    F_X(x) = E X^k 1{X <= x}
//!    G_X(x) = E (x_+ ^ X)^k          (^ = min, x_+ = max(x,0))
//!    F_hat(t) = E X^k e^{itX}
//!    G_hat(t) = int_0^1 k a^{k-1} E X^k e^{itaX} da
//!    ```
//!
//!    together with the dilation pair `V(t) = e^{itX}` and
//!    `W(t) = int_0^1 k a^{k-1} e^{itaX} da`, from which the tail-moment
//!    sandwich weights `E X^k (W - V)` and `E |X|^k (W + V)` are built.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

use crate::pv_transform::{adaptive_complex, PvError};
use crate::util::{csum, i_pow, i_pow_neg, CompensatedComplexSum};

/// Errors from distribution construction and moment bookkeeping.
#[derive(Debug, Error)]
pub enum DistError {
    #[error("distribution needs at least one atom with positive probability")]
    Empty,
    #[error("atom probability {p} at x={x} must be finite and nonnegative")]
    BadProbability { x: f64, p: f64 },
    #[error("atom position {0} must be finite")]
    BadPosition(f64),
    #[error("probabilities sum to {0}; expected 1 within 1e-12")]
    MassNotOne(f64),
    #[error("distribution has zero variance; standardization undefined")]
    ZeroVariance,
    #[error("iid sum needs n >= 1, got 0")]
    ZeroCopies,
    #[error("convolution support would hold {got} atoms, above the {max} cap")]
    SupportTooLarge { got: u64, max: u64 },
    #[error("invalid distribution spec: {0}")]
    BadSpec(String),
}

/// A finite distribution: strictly increasing atom positions with
/// probabilities summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl DiscreteDist {
    /// Builds a distribution from unordered `(x, p)` pairs.
    ///
    /// Atoms are sorted, exact duplicates coalesced, and zero-probability
    /// atoms dropped. The raw probabilities must sum to 1 within `1e-12`;
    /// they are then renormalized so the stored mass is 1 to roundoff.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, DistError> {
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        for (x, p) in atoms {
            if !x.is_finite() {
                return Err(DistError::BadPosition(x));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(DistError::BadProbability { x, p });
            }
            if p == 0.0 {
                continue;
            }
            // fold -0.0 onto +0.0 so coalescing sees one zero
            let x = if x == 0.0 { 0.0 } else { x };
            pairs.push((x, p));
        }
        if pairs.is_empty() {
            return Err(DistError::Empty);
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut xs: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut ps: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, p) in pairs {
            if let Some(last) = xs.last() {
                if *last == x {
                    *ps.last_mut().expect("parallel vec") += p;
                    continue;
                }
            }
            xs.push(x);
            ps.push(p);
        }
        let total = csum(ps.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(DistError::MassNotOne(total));
        }
        for p in &mut ps {
            *p /= total;
        }
        Ok(Self { xs, ps })
    }

    /// Internal constructor for outputs that are sorted and coalesced by
    /// construction (convolutions, affine images). Skips the mass check so
    /// sub-roundoff drift can be observed by the test suite instead of being
    /// silently renormalized away.
    pub(crate) fn from_sorted_unchecked(xs: Vec<f64>, ps: Vec<f64>) -> Self {
        debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(xs.len(), ps.len());
        Self { xs, ps }
    }

    /// Fair coin on {-1, +1}.
    pub fn rademacher() -> Self {
        Self {
            xs: vec![-1.0, 1.0],
            ps: vec![0.5, 0.5],
        }
    }

    /// Bernoulli distribution on {0, 1} with success probability `p` in (0,1).
    pub fn bernoulli(p: f64) -> Result<Self, DistError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::BadProbability { x: 1.0, p });
        }
        Ok(Self {
            xs: vec![0.0, 1.0],
            ps: vec![1.0 - p, p],
        })
    }

    /// Unit mass at a single point.
    pub fn point_mass(x: f64) -> Result<Self, DistError> {
        if !x.is_finite() {
            return Err(DistError::BadPosition(x));
        }
        Ok(Self {
            xs: vec![if x == 0.0 { 0.0 } else { x }],
            ps: vec![1.0],
        })
    }

    /// Atom positions, strictly increasing.
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Atom probabilities, parallel to [`Self::xs`].
    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    /// Iterator over `(x, p)` pairs in increasing `x`.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ps.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Total probability mass (1 up to accumulated roundoff).
    pub fn total_mass(&self) -> f64 {
        csum(self.ps.iter().copied())
    }

    /// `E g(X)` with compensated accumulation.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        csum(self.atoms().map(|(x, p)| p * g(x)))
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    /// Central second moment, computed around the mean for stability.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    /// `E X^k` for integer `k >= 0`.
    pub fn moment(&self, k: u32) -> f64 {
        self.expect(|x| x.powi(k as i32))
    }

    /// `E |X|^k` for integer `k >= 0`.
    pub fn abs_moment(&self, k: u32) -> f64 {
        self.expect(|x| x.abs().powi(k as i32))
    }

    /// `E X_+^r = E X^r 1{X > 0}` for real `r >= 0` (r = 0 gives `P(X > 0)`).
    pub fn pos_part_moment(&self, r: f64) -> f64 {
        csum(self.atoms().filter(|&(x, _)| x > 0.0).map(|(x, p)| p * x.powf(r)))
    }

    /// `E |X_-|^r = E |X|^r 1{X < 0}` for real `r >= 0` (r = 0 gives `P(X < 0)`).
    pub fn neg_part_abs_moment(&self, r: f64) -> f64 {
        csum(
            self.atoms()
                .filter(|&(x, _)| x < 0.0)
                .map(|(x, p)| p * (-x).powf(r)),
        )
    }

    /// `P(X > x)`, summed over the tail atoms only.
    pub fn prob_gt(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|&v| v <= x);
        csum(self.ps[i..].iter().copied())
    }

    /// `P(X >= x)`.
    pub fn prob_ge(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|&v| v < x);
        csum(self.ps[i..].iter().copied())
    }

    /// `P(X <= x)`, summed over the head atoms only.
    pub fn prob_le(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|&v| v <= x);
        csum(self.ps[..i].iter().copied())
    }

    /// `P(X < x)`.
    pub fn prob_lt(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|&v| v < x);
        csum(self.ps[..i].iter().copied())
    }

    /// Distribution of `a*X + b` for `a != 0`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self, DistError> {
        if !(a.is_finite() && b.is_finite()) || a == 0.0 {
            return Err(DistError::BadPosition(a));
        }
        let map = |x: f64| {
            let y = a * x + b;
            if y == 0.0 {
                0.0
            } else {
                y
            }
        };
        let (xs, ps): (Vec<f64>, Vec<f64>) = if a > 0.0 {
            (self.xs.iter().map(|&x| map(x)).collect(), self.ps.clone())
        } else {
            (
                self.xs.iter().rev().map(|&x| map(x)).collect(),
                self.ps.iter().rev().copied().collect(),
            )
        };
        // an affine map is injective, but rounding could in principle merge
        // neighbours; rebuild defensively if monotonicity was lost
        if xs.windows(2).all(|w| w[0] < w[1]) {
            Ok(Self::from_sorted_unchecked(xs, ps))
        } else {
            Self::new(xs.into_iter().zip(ps))
        }
    }

    /// Distribution of `-X`.
    pub fn negate(&self) -> Self {
        self.affine(-1.0, 0.0).expect("negation is always valid")
    }

    /// Distribution of `(X - mean)/sd`; fails on zero variance.
    pub fn standardize(&self) -> Result<Self, DistError> {
        let m = self.mean();
        let v = self.variance();
        if !(v > 0.0) || !v.is_finite() {
            return Err(DistError::ZeroVariance);
        }
        let sd = v.sqrt();
        self.affine(1.0 / sd, -m / sd)
    }
}

/// Exact moment table attached to a characteristic function.
///
/// Index `j` of each vector holds the order-`j` value, `j = 0..=k_max`;
/// `pos[0]` and `neg_abs[0]` are `P(X > 0)` and `P(X < 0)`.
#[derive(Debug, Clone)]
pub struct MomentData {
    /// `E X^j`.
    pub raw: Vec<f64>,
    /// `E |X|^j`.
    pub abs: Vec<f64>,
    /// `E X_+^j`.
    pub pos: Vec<f64>,
    /// `E |X_-|^j`.
    pub neg_abs: Vec<f64>,
    /// Third absolute moment of the standardized summand, for iid sums.
    pub beta3: Option<f64>,
    /// Number of iid summands, when the variable is a standardized sum.
    pub n: Option<u32>,
}

impl MomentData {
    /// Exact moments of a finite distribution up to order `k_max`.
    pub fn from_dist(d: &DiscreteDist, k_max: u32) -> Self {
        let js = 0..=k_max;
        Self {
            raw: js.clone().map(|j| d.moment(j)).collect(),
            abs: js.clone().map(|j| d.abs_moment(j)).collect(),
            pos: js.clone().map(|j| d.pos_part_moment(j as f64)).collect(),
            neg_abs: js.map(|j| d.neg_part_abs_moment(j as f64)).collect(),
            beta3: None,
            n: None,
        }
    }
}

#[derive(Clone)]
enum CfImpl {
    /// `f(t) = sum p_j e^{i t x_j}`.
    Atoms(Arc<DiscreteDist>),
    /// `f(t) = phi(t/sqrt(n))^n` for the cf `phi` of the standardized base.
    IidSum { base: Arc<DiscreteDist>, n: u32 },
    /// `f(t) = e^{-t^2/2}`.
    StdNormal,
    /// Caller-supplied evaluators (black-box cf input).
    Custom {
        eval: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
        deriv: Arc<dyn Fn(u32, f64) -> Complex64 + Send + Sync>,
    },
}

/// A characteristic function `f(t) = E e^{itX}` with derivatives up to
/// `k_max` and, when the underlying distribution is known, its exact moments.
///
/// Invariants (tested, and holding for every built-in constructor):
/// `f(0) = 1`, `|f(t)| <= 1`, `f(-t) = conj(f(t))`, and
/// `f^(j)(0) = i^j E X^j` whenever moments are present.
#[derive(Clone)]
pub struct CharFn {
    imp: CfImpl,
    k_max: u32,
    /// Exact moments of the variable, when known.
    pub moments: Option<MomentData>,
}

impl std::fmt::Debug for CharFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.imp {
            CfImpl::Atoms(d) => format!("atoms({})", d.len()),
            CfImpl::IidSum { base, n } => format!("iid_sum(base {} atoms, n={n})", base.len()),
            CfImpl::StdNormal => "std_normal".to_string(),
            CfImpl::Custom { .. } => "custom".to_string(),
        };
        f.debug_struct("CharFn")
            .field("kind", &kind)
            .field("k_max", &self.k_max)
            .finish()
    }
}

/// Derivatives of `phi(u) = sum p e^{iux}` at `u`: `phi^(j)(u) = i^j E X^j e^{iuX}`.
fn atoms_deriv(d: &DiscreteDist, j: u32, u: f64) -> Complex64 {
    let mut s = CompensatedComplexSum::new();
    for (x, p) in d.atoms() {
        let w = p * x.powi(j as i32);
        s.add(Complex64::from_polar(1.0, u * x) * w);
    }
    i_pow(j) * s.value()
}

impl CharFn {
    /// Characteristic function of a finite distribution, with exact moments.
    pub fn from_discrete(d: &DiscreteDist) -> Self {
        Self {
            moments: Some(MomentData::from_dist(d, 3)),
            imp: CfImpl::Atoms(Arc::new(d.clone())),
            k_max: 3,
        }
    }

    /// `f(t) = e^{-t^2/2}` with the closed-form normal moment table.
    pub fn standard_normal() -> Self {
        let r = (2.0 / PI).sqrt(); // E|Z|
        Self {
            imp: CfImpl::StdNormal,
            k_max: 3,
            moments: Some(MomentData {
                raw: vec![1.0, 0.0, 1.0, 0.0],
                abs: vec![1.0, r, 1.0, 2.0 * r],
                pos: vec![0.5, 0.5 * r, 0.5, r],
                neg_abs: vec![0.5, 0.5 * r, 0.5, r],
                beta3: Some(2.0 * r),
                n: Some(1),
            }),
        }
    }

    /// Wraps caller-supplied evaluators. `deriv(0, t)` must agree with `eval(t)`.
    pub fn from_closures(
        eval: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
        deriv: Arc<dyn Fn(u32, f64) -> Complex64 + Send + Sync>,
        k_max: u32,
        moments: Option<MomentData>,
    ) -> Self {
        Self {
            imp: CfImpl::Custom { eval, deriv },
            k_max,
            moments,
        }
    }

    pub(crate) fn from_standardized_sum(ss: &crate::oracle::StandardizedSum) -> Self {
        let mut m = MomentData::from_dist(&ss.dist, 3);
        m.beta3 = Some(ss.beta3);
        m.n = Some(ss.n);
        Self {
            imp: CfImpl::IidSum {
                base: Arc::new(ss.base_std.clone()),
                n: ss.n,
            },
            k_max: 3,
            moments: Some(m),
        }
    }

    /// Highest derivative order this cf can produce.
    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// `f(t)`.
    pub fn eval(&self, t: f64) -> Complex64 {
        match &self.imp {
            CfImpl::Atoms(d) => {
                let mut s = CompensatedComplexSum::new();
                for (x, p) in d.atoms() {
                    s.add(Complex64::from_polar(p, t * x));
                }
                s.value()
            }
            CfImpl::IidSum { base, n } => {
                let u = t / (*n as f64).sqrt();
                atoms_deriv(base, 0, u).powu(*n)
            }
            CfImpl::StdNormal => Complex64::new((-0.5 * t * t).exp(), 0.0),
            CfImpl::Custom { eval, .. } => eval(t),
        }
    }

    /// `f^(j)(t)` for `j <= k_max`.
    ///
    /// For iid sums `f(t) = phi(t/sqrt(n))^n` the derivatives are the exact
    /// chain/product-rule expansions in `phi`, `phi'`, `phi''`, `phi'''`
    /// (finite trigonometric sums), never numerical differentiation.
    pub fn deriv(&self, j: u32, t: f64) -> Complex64 {
        assert!(
            j <= self.k_max,
            "derivative order {j} exceeds k_max {}",
            self.k_max
        );
        match &self.imp {
            CfImpl::Atoms(d) => atoms_deriv(d, j, t),
            CfImpl::IidSum { base, n } => {
                let n = *n;
                let rn = (n as f64).sqrt();
                let u = t / rn;
                let phi = |order: u32| atoms_deriv(base, order, u);
                let nf = n as f64;
                match j {
                    0 => phi(0).powu(n),
                    1 => rn * phi(0).powu(n - 1) * phi(1),
                    2 => {
                        let mut v = phi(0).powu(n - 1) * phi(2);
                        if n >= 2 {
                            let p1 = phi(1);
                            v += (nf - 1.0) * phi(0).powu(n - 2) * p1 * p1;
                        }
                        v
                    }
                    3 => {
                        let mut v = phi(0).powu(n - 1) * phi(3);
                        if n >= 2 {
                            v += 3.0 * (nf - 1.0) * phi(0).powu(n - 2) * phi(1) * phi(2);
                        }
                        if n >= 3 {
                            let p1 = phi(1);
                            v += (nf - 1.0) * (nf - 2.0) * phi(0).powu(n - 3) * p1 * p1 * p1;
                        }
                        v / rn
                    }
                    _ => unreachable!("k_max is 3 for iid sums"),
                }
            }
            CfImpl::StdNormal => {
                let g = (-0.5 * t * t).exp();
                let factor = match j {
                    0 => 1.0,
                    1 => -t,
                    2 => t * t - 1.0,
                    3 => 3.0 * t - t * t * t,
                    _ => unreachable!("k_max is 3 for the normal cf"),
                };
                Complex64::new(factor * g, 0.0)
            }
            CfImpl::Custom { eval, deriv } => {
                if j == 0 {
                    eval(t)
                } else {
                    deriv(j, t)
                }
            }
        }
    }
}

/// Builds the characteristic function of `X = (S - E S)/sd(S)` for
/// `S = X_1 + ... + X_n` iid copies of `base`, with exact moments from the
/// convolved distribution and derivatives up to order three.
///
/// The base is standardized internally (zero-variance bases are rejected),
/// so callers may pass raw atoms.
pub fn make_standardized_iid_sum(base: &DiscreteDist, n: u32) -> Result<CharFn, DistError> {
    let ss = crate::oracle::StandardizedSum::new(base, n)?;
    Ok(CharFn::from_standardized_sum(&ss))
}

/// `int_0^1 k a^{k-1} e^{a z} da` for integer `k >= 1` and complex `z`.
///
/// For `|z| >= 1/2` the recurrence on `J_m = int_0^1 a^m e^{a z} da`,
/// `J_0 = (e^z - 1)/z`, `J_m = (e^z - m J_{m-1})/z`, gives the value as
/// `k * J_{k-1}`. Near zero the recurrence cancels catastrophically and the
/// series `sum_m z^m/m! * k/(k+m)` is used instead.
pub fn incomplete_exp(k: u32, z: Complex64) -> Complex64 {
    assert!(k >= 1, "incomplete_exp needs k >= 1");
    let kf = k as f64;
    if z.norm() < 0.5 {
        let mut acc = CompensatedComplexSum::new();
        acc.add(Complex64::new(1.0, 0.0)); // m = 0 term
        let mut term = Complex64::new(1.0, 0.0); // z^m / m!
        for m in 1..=30u32 {
            term = term * z / (m as f64);
            acc.add(term * (kf / (kf + m as f64)));
            if term.norm() < 1e-22 {
                break;
            }
        }
        acc.value()
    } else {
        let ez = z.exp();
        let mut jm = (ez - 1.0) / z; // J_0
        for m in 1..k {
            jm = (ez - (m as f64) * jm) / z;
        }
        kf * jm
    }
}

/// `E X^k (W - V)(t) = i^{-k} int_0^1 [f^(k)(a t) - f^(k)(t)] k a^{k-1} da`,
/// evaluated by adaptive quadrature in `a` to absolute tolerance `tol`.
///
/// Returns exactly zero at `t = 0`, where the integrand vanishes identically.
pub fn w_minus_v(cf: &CharFn, k: u32, t: f64, tol: f64) -> Result<Complex64, PvError> {
    assert!(k >= 1 && k <= cf.k_max(), "need 1 <= k <= k_max");
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let fk_t = cf.deriv(k, t);
    let kf = k as f64;
    let integrand =
        |a: f64| (cf.deriv(k, a * t) - fk_t) * (kf * a.powi(k as i32 - 1));
    let init = ((t.abs() / PI).ceil() as usize).clamp(8, 512);
    let (value, _err, _panels) = adaptive_complex(&integrand, 0.0, 1.0, tol, init, 4000)?;
    Ok(i_pow_neg(k) * value)
}

/// `E |X|^k (W + V)(t)` as an exact atom sum:
/// `sum_j p_j |x_j|^k ( int_0^1 e^{i a x_j t} k a^{k-1} da + e^{i x_j t} )`
/// with the inner integral in closed form per atom ([`incomplete_exp`]).
pub fn abs_w_plus_v(dist: &DiscreteDist, k: u32, t: f64) -> Complex64 {
    assert!(k >= 1, "need k >= 1");
    let mut s = CompensatedComplexSum::new();
    for (x, p) in dist.atoms() {
        let w = p * x.abs().powi(k as i32);
        if w == 0.0 {
            continue;
        }
        let z = Complex64::new(0.0, x * t);
        s.add((incomplete_exp(k, z) + z.exp()) * w);
    }
    s.value()
}

/// The surrogate-sandwich integrand `i^{-k} [ f^(k)(a t) + f^(k)(t) ]`.
///
/// Summed against `k a^{k-1} da` over `a` in (0, 1] and passed through the
/// odd filter component, it replaces the atom-sum weight `E |X|^k (W + V)`
/// when only the characteristic function is available.
pub fn cf_surrogate_plus(cf: &CharFn, k: u32, alpha: f64, t: f64) -> Complex64 {
    assert!(k >= 1 && k <= cf.k_max(), "need 1 <= k <= k_max");
    debug_assert!(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    i_pow_neg(k) * (cf.deriv(k, alpha * t) + cf.deriv(k, t))
}

/// Exact evaluators for the order-`k` signed-power functionals of a finite
/// distribution (definitions in the module docs).
#[derive(Debug, Clone, Copy)]
pub struct SignedPowerFunctionals<'a> {
    dist: &'a DiscreteDist,
    k: u32,
}

/// Attaches the order-`k` functional evaluators to a distribution.
pub fn signed_power_eval(dist: &DiscreteDist, k: u32) -> SignedPowerFunctionals<'_> {
    assert!(k >= 1, "need k >= 1");
    SignedPowerFunctionals { dist, k }
}

impl<'a> SignedPowerFunctionals<'a> {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// `L_X(x) = x^k ( P(X>x) 1{x>0} - P(X<x) 1{x<0} )`; zero at `x = 0`.
    pub fn signed_tail_moment(&self, x: f64) -> f64 {
        if x > 0.0 {
            x.powi(self.k as i32) * self.dist.prob_gt(x)
        } else if x < 0.0 {
            -x.powi(self.k as i32) * self.dist.prob_lt(x)
        } else {
            0.0
        }
    }

    /// `F_X(x) = E X^k 1{X <= x}`.
    pub fn partial_moment(&self, x: f64) -> f64 {
        let k = self.k as i32;
        csum(
            self.dist
                .atoms()
                .take_while(|&(y, _)| y <= x)
                .map(|(y, p)| p * y.powi(k)),
        )
    }

    /// `G_X(x) = E (min(max(x,0), X))^k`.
    pub fn capped_moment(&self, x: f64) -> f64 {
        let cap = x.max(0.0);
        let k = self.k as i32;
        csum(self.dist.atoms().map(|(y, p)| p * y.min(cap).powi(k)))
    }

    /// `F_hat(t) = E X^k e^{itX}`.
    pub fn partial_transform(&self, t: f64) -> Complex64 {
        let k = self.k as i32;
        let mut s = CompensatedComplexSum::new();
        for (y, p) in self.dist.atoms() {
            s.add(Complex64::from_polar(1.0, t * y) * (p * y.powi(k)));
        }
        s.value()
    }

    /// `G_hat(t) = int_0^1 k a^{k-1} E X^k e^{itaX} da`, in closed form per atom.
    pub fn capped_transform(&self, t: f64) -> Complex64 {
        let k = self.k as i32;
        let mut s = CompensatedComplexSum::new();
        for (y, p) in self.dist.atoms() {
            let w = p * y.powi(k);
            if w == 0.0 {
                continue;
            }
            s.add(incomplete_exp(self.k, Complex64::new(0.0, t * y)) * w);
        }
        s.value()
    }

    /// `E X^k = F_X(inf-) = G_X(inf-)`.
    pub fn total(&self) -> f64 {
        self.dist.moment(self.k)
    }
}

/// A parsed distribution spec: either a finite atom set or the standard
/// normal (which only supports cf-based and closed-form oracle paths).
#[derive(Debug, Clone)]
pub enum SourceDist {
    Discrete(DiscreteDist),
    Normal,
}

/// Parses the distribution grammar shared with the command line:
/// `rademacher` | `bernoulli:p` | `atoms:x1,p1;x2,p2;...` | `normal`.
pub fn parse_dist_spec(spec: &str) -> Result<SourceDist, DistError> {
    let s = spec.trim();
    if s.eq_ignore_ascii_case("rademacher") {
        return Ok(SourceDist::Discrete(DiscreteDist::rademacher()));
    }
    if s.eq_ignore_ascii_case("normal") {
        return Ok(SourceDist::Normal);
    }
    if let Some(rest) = s.strip_prefix("bernoulli:") {
        let p: f64 = rest
            .trim()
            .parse()
            .map_err(|_| DistError::BadSpec(format!("bernoulli parameter `{rest}` is not a number")))?;
        return Ok(SourceDist::Discrete(DiscreteDist::bernoulli(p)?));
    }
    if let Some(rest) = s.strip_prefix("atoms:") {
        let mut atoms = Vec::new();
        for pair in rest.split(';') {
            let pair = pair.trim();
            if pair.is_empty() {
                continue;
            }
            let (xs, ps) = pair.split_once(',').ok_or_else(|| {
                DistError::BadSpec(format!("atom `{pair}` must look like x,p"))
            })?;
            let x: f64 = xs.trim().parse().map_err(|_| {
                DistError::BadSpec(format!("atom position `{xs}` is not a number"))
            })?;
            let p: f64 = ps.trim().parse().map_err(|_| {
                DistError::BadSpec(format!("atom probability `{ps}` is not a number"))
            })?;
            atoms.push((x, p));
        }
        if atoms.is_empty() {
            return Err(DistError::BadSpec("atoms list is empty".to_string()));
        }
        return Ok(SourceDist::Discrete(DiscreteDist::new(atoms)?));
    }
    Err(DistError::BadSpec(format!(
        "unknown distribution `{s}`; expected rademacher | bernoulli:p | atoms:x1,p1;... | normal"
    )))
}
