//! Complete elliptic integrals and the Jacobi `dn` function.
//!
//! Every routine takes the modulus `k`, never the parameter `m = k^2`.
//! Both the integrals and `dn` are driven by the arithmetic-geometric mean.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};

const AGM_MAX_ITER: usize = 40;

/// Moduli above this use the soliton-limit expansion of `dn`.
const SECH_SWITCH: f64 = 1.0 - 1e-9;

/// `K(k)`, `E(k)` and their ratio `q = E/K` for one modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticEval {
    pub k: f64,
    pub big_k: f64,
    pub big_e: f64,
    pub q: f64,
}

/// Complementary modulus `sqrt(1 - k^2)`, evaluated without cancellation.
pub fn complement(k: f64) -> f64 {
    ((1.0 - k) * (1.0 + k)).max(0.0).sqrt()
}

/// Complete elliptic integrals of the first and second kind.
///
/// Arithmetic-geometric mean of `(1, k')`; `E` follows from the running sum
/// of the squared half-differences.
pub fn elliptic_ke(k: f64) -> Result<EllipticEval> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Domain {
            what: "elliptic_ke",
            value: k,
            domain: "0 <= k < 1",
        });
    }
    if k == 0.0 {
        return Ok(EllipticEval {
            k,
            big_k: FRAC_PI_2,
            big_e: FRAC_PI_2,
            q: 1.0,
        });
    }
    let mut a = 1.0;
    let mut b = complement(k);
    let mut c = k;
    let mut pow2 = 0.5;
    let mut sum = pow2 * c * c;
    for _ in 0..AGM_MAX_ITER {
        let a_next = 0.5 * (a + b);
        let b_next = (a * b).sqrt();
        c = 0.5 * (a - b);
        a = a_next;
        b = b_next;
        pow2 *= 2.0;
        sum += pow2 * c * c;
        if c.abs() <= f64::EPSILON * a {
            break;
        }
    }
    let big_k = PI / (2.0 * a);
    let big_e = big_k * (1.0 - sum);
    Ok(EllipticEval {
        k,
        big_k,
        big_e,
        q: big_e / big_k,
    })
}

/// Derivative `dq/dm` of `q = E/K` with respect to the parameter `m = k^2`.
///
/// Needed by the Newton Jacobian of the modulation system.
pub(crate) fn q_derivative_m(ev: &EllipticEval) -> f64 {
    let m = ev.k * ev.k;
    if m < 1e-5 {
        // q = 1 - m/2 - m^2/16 - m^3/32 + O(m^4)
        return -0.5 - m / 8.0 - 3.0 * m * m / 32.0;
    }
    let mc = 1.0 - m;
    let dk = (ev.big_e - mc * ev.big_k) / (2.0 * m * mc);
    let de = (ev.big_e - ev.big_k) / (2.0 * m);
    (de * ev.big_k - ev.big_e * dk) / (ev.big_k * ev.big_k)
}

fn check_modulus(what: &'static str, k: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::Domain {
            what,
            value: k,
            domain: "0 <= k <= 1",
        });
    }
    Ok(())
}

/// Jacobi elliptic functions `(sn, cn, dn)` at `theta` for modulus `k`.
///
/// The argument is first folded into one period of `dn`; since `sn` and `cn`
/// flip sign under a shift of `2K`, only sign-invariant combinations such as
/// `sn*cn` survive the folding. Callers inside the crate only use those.
pub(crate) fn sncndn_folded(theta: f64, k: f64) -> Result<(f64, f64, f64)> {
    check_modulus("jacobi_dn", k)?;
    if !theta.is_finite() {
        return Err(Error::Domain {
            what: "jacobi_dn",
            value: theta,
            domain: "finite argument",
        });
    }
    if k == 0.0 {
        return Ok((theta.sin(), theta.cos(), 1.0));
    }
    let kc = complement(k);
    let half_period = if k < 1.0 {
        elliptic_ke(k)?.big_k
    } else {
        f64::INFINITY
    };
    let u = if half_period.is_finite() {
        theta - 2.0 * half_period * (theta / (2.0 * half_period)).round()
    } else {
        theta
    };

    if k > SECH_SWITCH {
        // first order in m1 = k'^2 about the soliton limit
        let m1 = kc * kc;
        let sech = 1.0 / u.cosh();
        let tanh = u.tanh();
        let sc = u.sinh() * u.cosh();
        let sn = tanh + 0.25 * m1 * (sc - u) * sech * sech;
        let cn = sech - 0.25 * m1 * (sc - u) * tanh * sech;
        let dn = sech + 0.25 * m1 * (sc + u) * tanh * sech;
        return Ok((sn, cn, dn.clamp(kc, 1.0)));
    }

    // Descending AGM with the amplitude recovered by backward recurrence.
    let mut a = [0.0f64; AGM_MAX_ITER + 1];
    let mut c = [0.0f64; AGM_MAX_ITER + 1];
    a[0] = 1.0;
    c[0] = k;
    let mut b = kc;
    let mut n = 0;
    while n < AGM_MAX_ITER {
        let an = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        a[n + 1] = an;
        n += 1;
        if c[n].abs() <= f64::EPSILON * a[n] {
            break;
        }
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let m = k * k;
    // dn^2 = 1 - m sn^2 = k'^2 + m cn^2; take the form without cancellation
    let dn2 = if cn * cn < 0.5 { kc * kc + m * cn * cn } else { 1.0 - m * sn * sn };
    Ok((sn, cn, dn2.sqrt().clamp(kc, 1.0)))
}

/// Jacobi delta amplitude `dn(theta; k)`, even in `theta` and `2K`-periodic.
pub fn jacobi_dn(theta: f64, k: f64) -> Result<f64> {
    sncndn_folded(theta.abs(), k).map(|(_, _, dn)| dn)
}

/// `Y = dn^2(theta; k)` with its first four `theta`-derivatives.
///
/// Higher derivatives follow from `(Y')^2 = 4Y(1-Y)(Y-1+k^2)`, so only
/// `Y'` needs the elliptic functions themselves.
pub(crate) fn dn2_jet(theta: f64, k: f64) -> Result<[f64; 5]> {
    let sign = if theta < 0.0 { -1.0 } else { 1.0 };
    let (sn, cn, dn) = sncndn_folded(theta.abs(), k)?;
    let m = k * k;
    let y = dn * dn;
    let y1 = sign * (-2.0 * m * sn * cn * dn);
    let y2 = 2.0 * (-3.0 * y * y + 2.0 * (2.0 - m) * y - (1.0 - m));
    let lin = -12.0 * y + 4.0 * (2.0 - m);
    let y3 = lin * y1;
    let y4 = -12.0 * y1 * y1 + lin * y2;
    Ok([y, y1, y2, y3, y4])
}
