//! Ground truth: exact n-fold convolutions, exact tails and moments of
//! standardized iid sums, a high-accuracy normal CDF, and the tail-gap
//! profiles `Delta(z) = |P(S > B z) - P(Z > z)|` used by the audits.

use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::cf_core::{DiscreteDist, DistError};

/// Largest atom count a convolution result may have.
pub const MAX_SUPPORT: u64 = 1_000_000;

/// Complementary error function on the whole real line.
///
/// For `x > 0` it uses the exponentially convergent trapezoid discretization
/// (step `h`) of the integral representation
///
/// ```text
/// erfc(x) = (h x e^{-x^2} / pi) [ 1/x^2 + 2 sum_{k>=1} e^{-k^2 h^2} / (k^2 h^2 + x^2) ]
///           + 2 / (1 - e^{2 pi x / h}),
/// ```
///
/// whose discretization error is O(e^{-(pi/h)^2}) — below 1e-26 for h = 0.4,
/// so f64 accuracy is limited only by rounding. The argument of `e^{-x^2}`
/// is split exactly via a fused multiply-add so the result is accurate to a
/// few ulp in both the body and the far tail. Below `x = 0.5` the pole term
/// and its correction cancel (absolute error ~ eps/x), so that range uses
/// the Maclaurin series of `erf` instead. Negative arguments use
/// `erfc(-x) = 2 - erfc(x)`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        2.0 - erfc_pos(-x)
    } else {
        erfc_pos(x)
    }
}

fn erfc_pos(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 0.5 {
        1.0 - erf_series(x)
    } else {
        erfc_trapezoid(x)
    }
}

/// `erf(x) = (2/sqrt(pi)) sum_{m>=0} (-1)^m x^(2m+1) / (m! (2m+1))`,
/// rapidly convergent and cancellation-free for `|x| <= 0.5`.
fn erf_series(x: f64) -> f64 {
    debug_assert!(x.abs() <= 0.75);
    let x2 = x * x;
    let mut term = x; // (-1)^m x^(2m+1) / m!
    let mut sum = x;
    let mut m = 1u32;
    loop {
        term *= -x2 / m as f64;
        let add = term / (2 * m + 1) as f64;
        sum += add;
        m += 1;
        if add.abs() < 1e-19 || m > 40 {
            break;
        }
    }
    sum * 2.0 / PI.sqrt()
}

fn erfc_trapezoid(x: f64) -> f64 {
    if x > 27.0 {
        // erfc(27) < 1e-318: underflows f64
        return 0.0;
    }
    const H: f64 = 0.4;
    const KMAX: u32 = 18; // e^{-(K H)^2} = e^{-51.8}, below the series floor
    // exact split x^2 = hi + lo so exp sees an argument with no rounding loss
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    let ex = (-hi).exp() * (-lo).exp();
    let mut sum = 1.0 / hi;
    for k in 1..=KMAX {
        let kh = k as f64 * H;
        let kh2 = kh * kh;
        sum += 2.0 * (-kh2).exp() / (kh2 + hi);
    }
    let main = H * x * ex / PI * sum;
    let y = 2.0 * PI * x / H;
    let corr = if y > 708.0 { 0.0 } else { -2.0 / y.exp_m1() };
    main + corr
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function `Phi(x)`, relative accuracy a few
/// ulp in the body and ~1e-15 down the tails (`Phi(-8)` and beyond).
pub fn normal_cdf(x: f64) -> f64 {
    const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;
    if x >= 0.0 {
        1.0 - 0.5 * erfc_pos(x * INV_SQRT2)
    } else {
        0.5 * erfc_pos(-x * INV_SQRT2)
    }
}

/// Standard normal survival function `P(Z > x) = Phi(-x)`, computed directly
/// from `erfc` so both tails keep full relative accuracy.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

/// Detects whether all atoms sit on an arithmetic lattice `x0 + m * gap`
/// with the grid point reproducing each atom bitwise; returns the integer
/// indices when so.
fn lattice_indices(d: &DiscreteDist) -> Option<(f64, f64, Vec<u64>)> {
    let xs = d.xs();
    if xs.len() == 1 {
        return Some((xs[0], 1.0, vec![0]));
    }
    let mut gap = f64::INFINITY;
    for w in xs.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    if !(gap > 0.0 && gap.is_finite()) {
        return None;
    }
    let x0 = xs[0];
    let mut idx = Vec::with_capacity(xs.len());
    for &x in xs {
        let m = ((x - x0) / gap).round();
        if !(m >= 0.0 && m <= 1e15) {
            return None;
        }
        if x0 + m * gap != x {
            return None;
        }
        idx.push(m as u64);
    }
    Some((x0, gap, idx))
}

/// Exact distribution of `X_1 + ... + X_n` for iid copies of `base`.
///
/// Integer-lattice bases (Rademacher, Bernoulli, any atoms on a common
/// arithmetic grid reproducible in f64) are convolved by integer index, so
/// atom positions are computed as `n*x0 + K*gap` in one rounding each and
/// coalescing never drifts. Other bases fall back to a sparse convolution
/// keyed on exact f64 sums. Fails if the support would exceed
/// [`MAX_SUPPORT`] atoms.
pub fn convolve_iid(base: &DiscreteDist, n: u32) -> Result<DiscreteDist, DistError> {
    if n == 0 {
        return Err(DistError::ZeroCopies);
    }
    if n == 1 {
        return Ok(base.clone());
    }
    if let Some((x0, gap, idx)) = lattice_indices(base) {
        let m_max = *idx.last().expect("nonempty");
        let final_len = (n as u64) * m_max + 1;
        if final_len > MAX_SUPPORT {
            return Err(DistError::SupportTooLarge {
                got: final_len,
                max: MAX_SUPPORT,
            });
        }
        // repeated polynomial multiplication of the probability coefficients
        let mut basec = vec![0.0f64; m_max as usize + 1];
        for (j, &m) in idx.iter().enumerate() {
            basec[m as usize] = base.ps()[j];
        }
        let mut cur = basec.clone();
        for _ in 1..n {
            let mut next = vec![0.0f64; cur.len() + m_max as usize];
            for (i, &a) in cur.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (j, &b) in basec.iter().enumerate() {
                    if b != 0.0 {
                        next[i + j] += a * b;
                    }
                }
            }
            cur = next;
        }
        let origin = n as f64 * x0;
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        for (k, &p) in cur.iter().enumerate() {
            if p > 0.0 {
                xs.push(origin + k as f64 * gap);
                ps.push(p);
            }
        }
        return Ok(DiscreteDist::from_sorted_unchecked(xs, ps));
    }
    // general sparse path: accumulate on exact f64 sums
    let mut cur = base.clone();
    for _ in 1..n {
        cur = convolve_pair(&cur, base)?;
    }
    Ok(cur)
}

fn convolve_pair(a: &DiscreteDist, b: &DiscreteDist) -> Result<DiscreteDist, DistError> {
    let mut map: BTreeMap<u64, f64> = BTreeMap::new();
    for (xa, pa) in a.atoms() {
        for (xb, pb) in b.atoms() {
            let s = xa + xb;
            let s = if s == 0.0 { 0.0 } else { s };
            *map.entry(s.to_bits()).or_insert(0.0) += pa * pb;
        }
    }
    if map.len() as u64 > MAX_SUPPORT {
        return Err(DistError::SupportTooLarge {
            got: map.len() as u64,
            max: MAX_SUPPORT,
        });
    }
    let mut pairs: Vec<(f64, f64)> = map
        .into_iter()
        .map(|(bits, p)| (f64::from_bits(bits), p))
        .collect();
    pairs.sort_by(|u, v| u.0.total_cmp(&v.0));
    let (xs, ps) = pairs.into_iter().unzip();
    Ok(DiscreteDist::from_sorted_unchecked(xs, ps))
}

/// The standardized iid sum `X = (S - E S)/sd(S)`, with its exact
/// distribution, the standardized base, and the base's third absolute moment.
#[derive(Debug, Clone)]
pub struct StandardizedSum {
    /// `(X_1 - mean)/sd`: the standardized summand.
    pub base_std: DiscreteDist,
    /// Number of summands.
    pub n: u32,
    /// Exact distribution of `X = S/sqrt(n)` in terms of standardized summands.
    pub dist: DiscreteDist,
    /// `beta_3 = E |(X_1 - mean)/sd|^3 >= 1`.
    pub beta3: f64,
}

impl StandardizedSum {
    /// Convolves the raw base exactly and standardizes the sum in a single
    /// affine map (one rounding per atom).
    pub fn new(base: &DiscreteDist, n: u32) -> Result<Self, DistError> {
        let base_std = base.standardize()?;
        let raw_sum = convolve_iid(base, n)?;
        let mu = base.mean();
        let sd = base.variance().sqrt();
        let scale = 1.0 / (sd * (n as f64).sqrt());
        let dist = raw_sum.affine(scale, -(n as f64) * mu * scale)?;
        let beta3 = base_std.abs_moment(3);
        Ok(Self {
            base_std,
            n,
            dist,
            beta3,
        })
    }

    /// The Lyapunov ratio `beta_3 / sqrt(n)` of the sum.
    pub fn lyapunov_ratio(&self) -> f64 {
        self.beta3 / (self.n as f64).sqrt()
    }
}

/// One grid point of a tail-gap profile.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileRow {
    pub z: f64,
    /// `Delta(z) = |P(X > z) - P(Z > z)|` for the standardized sum `X`.
    pub delta: f64,
    /// `Delta(z) * (1 + z^3) * sqrt(n) / beta_3`.
    pub normalized: f64,
}

/// Exact tail-gap profile of a standardized iid sum against the normal law,
/// with the moment-weighted normalizations used by the audit commands.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaProfile {
    pub label: String,
    pub n: u32,
    pub beta3: f64,
    /// Lyapunov ratio `beta_3/sqrt(n)`.
    pub r_l: f64,
    /// Whether the moment-heavy regime `beta_3/sqrt(n) >= 2/3` applies.
    pub small_n_applicable: bool,
    pub rows: Vec<ProfileRow>,
    pub max_delta: f64,
    /// Max over the grid of `Delta(z)(1+z^3)sqrt(n)/beta_3`.
    pub max_normalized: f64,
    /// Max over the grid of `Delta(z)sqrt(n)/beta_3`.
    pub max_uniform_ratio: f64,
    /// Candidate nonuniform constant in the moment-heavy regime.
    pub c_nu_small_n: f64,
    /// Generous envelope the normalized profile must stay under.
    pub c_nu_envelope: f64,
    /// Best established iid uniform constant, for comparison.
    pub c_u_upper_iid: f64,
    /// Lower bound `(3 + sqrt(10)) / (6 sqrt(2 pi))` no uniform constant can beat.
    pub c_u_lower: f64,
}

/// Default audit grid: 81 points from 0 to 4 at step 0.05, which covers the
/// empirically hardest window `[2.0, 3.5]` at full resolution.
pub fn default_z_grid() -> Vec<f64> {
    (0..=80).map(|i| i as f64 * 0.05).collect()
}

/// Computes the exact tail-gap profile of the standardized n-fold sum of
/// `base` over `z_grid`.
pub fn delta_profile(
    base: &DiscreteDist,
    n: u32,
    z_grid: &[f64],
    label: &str,
) -> Result<DeltaProfile, DistError> {
    let ss = StandardizedSum::new(base, n)?;
    let r_l = ss.lyapunov_ratio();
    let mut rows = Vec::with_capacity(z_grid.len());
    let mut max_delta = 0.0f64;
    let mut max_normalized = 0.0f64;
    let mut max_uniform = 0.0f64;
    for &z in z_grid {
        let delta = (ss.dist.prob_gt(z) - normal_sf(z)).abs();
        let normalized = delta * (1.0 + z * z * z) / r_l;
        rows.push(ProfileRow {
            z,
            delta,
            normalized,
        });
        max_delta = max_delta.max(delta);
        max_normalized = max_normalized.max(normalized);
        max_uniform = max_uniform.max(delta / r_l);
    }
    Ok(DeltaProfile {
        label: label.to_string(),
        n,
        beta3: ss.beta3,
        r_l,
        small_n_applicable: r_l >= 2.0 / 3.0,
        rows,
        max_delta,
        max_normalized,
        max_uniform_ratio: max_uniform,
        c_nu_small_n: 4.5,
        c_nu_envelope: 25.0,
        c_u_upper_iid: 0.4748,
        c_u_lower: (3.0 + 10.0_f64.sqrt()) / (6.0 * (2.0 * PI).sqrt()),
    })
}

impl DeltaProfile {
    /// CSV rendering with columns `z,delta,normalized,r_L`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,delta,normalized,r_L\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.z, row.delta, row.normalized, self.r_l
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // 22-digit references for the normal distribution function
    const PHI_REF: [(f64, f64); 9] = [
        (0.0, 0.5),
        (0.5, 0.691_462_461_274_013_103_637_7),
        (1.0, 0.841_344_746_068_542_948_585_2),
        (2.0, 0.977_249_868_051_820_792_799_7),
        (3.0, 0.998_650_101_968_369_905_473_3),
        (-0.5, 0.308_537_538_725_986_896_362_3),
        (-3.0, 1.349_898_031_630_094_526_652e-3),
        (-5.0, 2.866_515_718_791_939_116_738e-7),
        (-8.0, 6.220_960_574_271_784_123_516e-16),
    ];

    #[test]
    fn normal_cdf_reference_values() {
        for &(x, want) in &PHI_REF {
            let got = normal_cdf(x);
            let rel = ((got - want) / want).abs();
            let gate = if x >= -0.5 { 1.2e-15 } else { 1e-13 };
            assert!(
                rel <= gate,
                "Phi({x}) = {got:e}, want {want:e}, rel err {rel:.2e} > {gate:e}"
            );
        }
    }

    #[test]
    fn normal_cdf_symmetry_and_sf() {
        for i in 0..=160 {
            let x = -8.0 + 0.1 * i as f64;
            assert_abs_diff_eq!(normal_cdf(x) + normal_cdf(-x), 1.0, epsilon = 1e-15);
            assert_eq!(normal_sf(x), normal_cdf(-x));
        }
        // erfc base identities
        assert_eq!(erfc(0.0), 1.0);
        assert_abs_diff_eq!(erfc(-1.0) + erfc(1.0), 2.0, epsilon = 1e-15);
        assert_eq!(erfc(30.0), 0.0);
        assert!(erfc(f64::NAN).is_nan());
    }

    #[test]
    fn erfc_branches_agree_at_seam() {
        // series and trapezoid paths around the 0.5 split, plus a 25-digit
        // reference for erfc(1/2) = 0.4795001221869534623172533...
        for &x in &[0.5, 0.55, 0.6] {
            let a = 1.0 - erf_series(x);
            let b = erfc_trapezoid(x);
            let rel = ((a - b) / b).abs();
            assert!(rel < 1e-15, "seam mismatch at {x}: {a} vs {b}");
        }
        let want = 0.479_500_122_186_953_462_317_253_3;
        assert!(((erfc(0.5) - want) / want).abs() < 1e-15);
    }

    #[test]
    fn normal_pdf_matches_cdf_derivative() {
        // centered difference of the cdf vs the density
        for &x in &[0.0, 0.7, 1.9, -2.4] {
            let h = 1e-5;
            let fd = (normal_cdf(x + h) - normal_cdf(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, normal_pdf(x), epsilon = 1e-9);
        }
    }

    #[test]
    fn convolution_examples() {
        // Rademacher^4: binomial coefficients over {-4,-2,0,2,4}
        let r4 = convolve_iid(&DiscreteDist::rademacher(), 4).unwrap();
        assert_eq!(r4.xs(), &[-4.0, -2.0, 0.0, 2.0, 4.0]);
        assert_eq!(
            r4.ps(),
            &[1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0]
        );

        // n = 1 returns the base unchanged
        let b = DiscreteDist::bernoulli(0.3).unwrap();
        assert_eq!(convolve_iid(&b, 1).unwrap(), b);

        // centered Bernoulli(1/2) convolved twice: {-1, 0, 1} with {1/4, 1/2, 1/4}
        let c = DiscreteDist::new([(-0.5, 0.5), (0.5, 0.5)]).unwrap();
        let c2 = convolve_iid(&c, 2).unwrap();
        assert_eq!(c2.xs(), &[-1.0, 0.0, 1.0]);
        assert_eq!(c2.ps(), &[0.25, 0.5, 0.25]);

        // n = 0 rejected
        assert!(matches!(
            convolve_iid(&c, 0),
            Err(DistError::ZeroCopies)
        ));
    }

    #[test]
    fn convolution_mass_and_cumulant_additivity() {
        let b = DiscreteDist::bernoulli(0.3).unwrap();
        let s9 = convolve_iid(&b, 9).unwrap();
        assert_abs_diff_eq!(s9.total_mass(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s9.mean(), 9.0 * 0.3, epsilon = 1e-13);
        assert_abs_diff_eq!(s9.variance(), 9.0 * 0.21, epsilon = 1e-13);
        // lattice support: integers 0..=9
        assert_eq!(s9.len(), 10);
        assert_eq!(s9.xs()[0], 0.0);
        assert_eq!(s9.xs()[9], 9.0);
    }

    #[test]
    fn general_path_handles_irrational_gaps() {
        let sqrt2 = 2.0_f64.sqrt();
        let base = DiscreteDist::new([(0.0, 0.5), (1.0, 0.3), (sqrt2, 0.2)]).unwrap();
        assert!(lattice_indices(&base).is_none(), "gaps 1 and sqrt2-1 are not a lattice");
        let s2 = convolve_iid(&base, 2).unwrap();
        // hand enumeration with the same f64 additions
        let mut map: BTreeMap<u64, f64> = BTreeMap::new();
        for (xa, pa) in base.atoms() {
            for (xb, pb) in base.atoms() {
                *map.entry((xa + xb).to_bits()).or_insert(0.0) += pa * pb;
            }
        }
        assert_eq!(s2.len(), map.len());
        for (x, p) in s2.atoms() {
            let want = map[&x.to_bits()];
            assert_abs_diff_eq!(p, want, epsilon = 1e-16);
        }
        assert_abs_diff_eq!(s2.total_mass(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn support_cap_enforced() {
        let b = DiscreteDist::bernoulli(0.5).unwrap();
        assert!(matches!(
            convolve_iid(&b, 2_000_000),
            Err(DistError::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn standardized_sum_rademacher() {
        let ss = StandardizedSum::new(&DiscreteDist::rademacher(), 4).unwrap();
        assert_eq!(ss.dist.xs(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(ss.beta3, 1.0);
        assert_abs_diff_eq!(ss.dist.mean(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ss.dist.variance(), 1.0, epsilon = 1e-14);
        assert_eq!(ss.lyapunov_ratio(), 0.5);
        // raw (unstandardized) bases standardize internally
        let raw = DiscreteDist::new([(10.0, 0.5), (14.0, 0.5)]).unwrap();
        let ss2 = StandardizedSum::new(&raw, 4).unwrap();
        for (a, b) in ss.dist.atoms().zip(ss2.dist.atoms()) {
            assert_abs_diff_eq!(a.0, b.0, epsilon = 1e-14);
            assert_abs_diff_eq!(a.1, b.1, epsilon = 1e-16);
        }
    }

    #[test]
    fn delta_profile_reference_points() {
        // symmetric base, z = 0: P(X > 0) = 1/2 exactly, so Delta(0) = 0
        let p1 = delta_profile(&DiscreteDist::rademacher(), 1, &[0.0], "r1").unwrap();
        assert_eq!(p1.rows[0].delta, 0.0);
        assert_eq!(p1.r_l, 1.0);
        assert!(p1.small_n_applicable);

        // Rademacher n=4 at z=1.9: P(S/2 > 1.9) = P(S = 4) = 1/16
        let p4 = delta_profile(&DiscreteDist::rademacher(), 4, &[1.9], "r4").unwrap();
        let want = (1.0 / 16.0 - normal_sf(1.9)).abs();
        assert_abs_diff_eq!(p4.rows[0].delta, want, epsilon = 1e-15);
        let want_norm = want * (1.0 + 1.9f64.powi(3)) / 0.5;
        assert_abs_diff_eq!(p4.rows[0].normalized, want_norm, epsilon = 1e-13);

        // far beyond the support both tails vanish
        let pfar = delta_profile(&DiscreteDist::rademacher(), 4, &[9.0], "r4far").unwrap();
        assert!(pfar.rows[0].delta < 1e-15);
    }

    #[test]
    fn delta_profile_scale_invariance() {
        let base = DiscreteDist::bernoulli(0.3).unwrap();
        let scaled = base.affine(3.7, 1.3).unwrap();
        let grid = default_z_grid();
        let a = delta_profile(&base, 3, &grid, "b").unwrap();
        let b = delta_profile(&scaled, 3, &grid, "b-scaled").unwrap();
        assert_abs_diff_eq!(a.beta3, b.beta3, epsilon = 1e-12);
        for (ra, rb) in a.rows.iter().zip(b.rows.iter()) {
            assert_abs_diff_eq!(ra.delta, rb.delta, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(a.max_normalized, b.max_normalized, epsilon = 1e-10);
    }

    #[test]
    fn default_grid_shape_and_csv() {
        let g = default_z_grid();
        assert_eq!(g.len(), 81);
        assert_eq!(g[0], 0.0);
        assert_abs_diff_eq!(g[80], 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1] - g[0], 0.05, epsilon = 1e-16);
        let p = delta_profile(&DiscreteDist::rademacher(), 2, &g[..3], "r2").unwrap();
        let csv = p.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "z,delta,normalized,r_L");
        assert_eq!(csv.lines().count(), 4);
    }
}
