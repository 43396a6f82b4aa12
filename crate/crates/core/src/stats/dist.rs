use std::f64::consts::PI;

use super::special::{beta_inc_reg, ln_gamma};
use super::{Result, StatsError};

/// Upper tail `P(T_df > t)` of Student's t distribution.
///
/// Uses `P(|T| > |t|) = I_{df/(df+t²)}(df/2, 1/2)` and halves it.
pub fn student_t_sf(t: f64, df: u64) -> Result<f64> {
    if df < 1 {
        return Err(StatsError::InvalidDof(df));
    }
    if t.is_nan() {
        return Err(StatsError::InvalidInput("t statistic is NaN".into()));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 0.0 } else { 1.0 });
    }
    let nu = df as f64;
    let t2 = t * t;
    let denom = nu + t2;
    let two_sided = beta_inc_reg(nu / 2.0, 0.5, nu / denom, t2 / denom);
    let tail = 0.5 * two_sided;
    Ok(if t > 0.0 { tail } else { 1.0 - tail })
}

pub fn student_t_cdf(t: f64, df: u64) -> Result<f64> {
    if t > 0.0 {
        // complement of the small upper tail keeps precision near 1
        return student_t_sf(t, df).map(|s| 1.0 - s);
    }
    student_t_sf(-t, df)
}

pub fn student_t_pdf(t: f64, df: u64) -> f64 {
    let nu = df as f64;
    let ln_norm = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * PI).ln();
    (ln_norm - (nu + 1.0) / 2.0 * (t * t / nu).ln_1p()).exp()
}

/// The `t` such that `student_t_sf(t, df) == upper_tail`.
///
/// Safeguarded Newton iteration inside a bracket that is widened until it
/// straddles the root.
pub fn student_t_isf(upper_tail: f64, df: u64) -> Result<f64> {
    if df < 1 {
        return Err(StatsError::InvalidDof(df));
    }
    if !(upper_tail > 0.0 && upper_tail < 1.0) {
        return Err(StatsError::InvalidInput(format!(
            "tail probability must lie in (0, 1), got {upper_tail}"
        )));
    }
    if upper_tail == 0.5 {
        return Ok(0.0);
    }
    if upper_tail > 0.5 {
        return student_t_isf(1.0 - upper_tail, df).map(|t| -t);
    }

    let mut lo = 0.0;
    let mut hi = normal_quantile(1.0 - upper_tail).max(1.0);
    while student_t_sf(hi, df)? > upper_tail {
        lo = hi;
        hi *= 2.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = student_t_sf(t, df)? - upper_tail;
        if f > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let pdf = student_t_pdf(t, df);
        let mut next = t + f / pdf;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * t.abs().max(1.0) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// Standard normal quantile (Acklam's rational approximation, |error| < 1.15e-9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}
