//! Natural log of the Gamma function for positive arguments.
//!
//! Port of the positive branch of FreeBSD msun's `e_lgamma_r.c` (the same
//! kernel used by musl and glibc). The piecewise rational approximations keep
//! the *relative* error of the result at the 1-2 ulp level even near the
//! zeros of ln(Gamma) at x = 1 and x = 2, which a plain Lanczos or Stirling
//! evaluation cannot do; for x >= 8 the kernel is a Stirling-series tail.
//!
//! The negative branch (reflection) is omitted: callers in this crate only
//! ever need x > 0.

// The coefficient tables are kept digit-for-digit as published.
#![allow(clippy::excessive_precision)]

/* origin: FreeBSD /usr/src/lib/msun/src/e_lgamma_r.c
 * ====================================================
 * Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
 *
 * Developed at SunSoft, a Sun Microsystems, Inc. business.
 * Permission to use, copy, modify, and distribute this
 * software is freely granted, provided that this notice
 * is preserved.
 * ====================================================
 */

const A0: f64 = 7.72156649015328655494e-02;
const A1: f64 = 3.22467033424113591611e-01;
const A2: f64 = 6.73523010531292681824e-02;
const A3: f64 = 2.05808084325167332806e-02;
const A4: f64 = 7.38555086081402883957e-03;
const A5: f64 = 2.89051383673415629091e-03;
const A6: f64 = 1.19270763183362067845e-03;
const A7: f64 = 5.10069792153511336608e-04;
const A8: f64 = 2.20862790713908385557e-04;
const A9: f64 = 1.08011567247583939954e-04;
const A10: f64 = 2.52144565451257326939e-05;
const A11: f64 = 4.48640949618915160150e-05;

/// Location of the positive minimum of ln(Gamma), and the value there.
const TC: f64 = 1.46163214496836224576e+00;
const TF: f64 = -1.21486290535849611461e-01;
/// -(tail of TF), recovers bits lost when rounding TF to a double.
const TT: f64 = -3.63867699703950536541e-18;

const T0: f64 = 4.83836122723810047042e-01;
const T1: f64 = -1.47587722994593911752e-01;
const T2: f64 = 6.46249402391333854778e-02;
const T3: f64 = -3.27885410759859649565e-02;
const T4: f64 = 1.79706750811820387126e-02;
const T5: f64 = -1.03142241298341437450e-02;
const T6: f64 = 6.10053870246291332635e-03;
const T7: f64 = -3.68452016781138256760e-03;
const T8: f64 = 2.25964780900612472250e-03;
const T9: f64 = -1.40346469989232843813e-03;
const T10: f64 = 8.81081882437654011382e-04;
const T11: f64 = -5.38595305356740546715e-04;
const T12: f64 = 3.15632070903625950361e-04;
const T13: f64 = -3.12754168375120860518e-04;
const T14: f64 = 3.35529192635519073543e-04;

const U0: f64 = -7.72156649015328655494e-02;
const U1: f64 = 6.32827064025093366517e-01;
const U2: f64 = 1.45492250137234768737e+00;
const U3: f64 = 9.77717527963372745603e-01;
const U4: f64 = 2.28963728064692451092e-01;
const U5: f64 = 1.33810918536787660377e-02;

const V1: f64 = 2.45597793713041134822e+00;
const V2: f64 = 2.12848976379893395361e+00;
const V3: f64 = 7.69285150456672783825e-01;
const V4: f64 = 1.04222645593369134254e-01;
const V5: f64 = 3.21709242282423911810e-03;

const S0: f64 = -7.72156649015328655494e-02;
const S1: f64 = 2.14982415960608852501e-01;
const S2: f64 = 3.25778796408930981787e-01;
const S3: f64 = 1.46350472652464452805e-01;
const S4: f64 = 2.66422703033638609560e-02;
const S5: f64 = 1.84028451407337715652e-03;
const S6: f64 = 3.19475326584100867617e-05;

const R1: f64 = 1.39200533467621045958e+00;
const R2: f64 = 7.21935547567138069525e-01;
const R3: f64 = 1.71933865632803078993e-01;
const R4: f64 = 1.86459191715652901344e-02;
const R5: f64 = 7.77942496381893596434e-04;
const R6: f64 = 7.32668430744625636189e-06;

const W0: f64 = 4.18938533204672725052e-01;
const W1: f64 = 8.33333333333329678849e-02;
const W2: f64 = -2.77777777728775536470e-03;
const W3: f64 = 7.93650558643019558500e-04;
const W4: f64 = -5.95187557450339963135e-04;
const W5: f64 = 8.36339918996282139126e-04;
const W6: f64 = -1.63092934096575273989e-03;

/// ln(Gamma(x)) for finite x > 0. Accurate to a couple of ulp in the
/// relative sense over the whole positive axis.
pub(crate) fn lgamma_positive(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());

    // |x| < 2^-70: lgamma(x) ~ -ln(x), the linear term is below rounding.
    if x < 8.470329472543003e-22 {
        return -x.ln();
    }
    // lgamma(1) = lgamma(2) = 0 exactly.
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }

    if x < 2.0 {
        // Reduce to the three kernel intervals around 2, around the minimum
        // TC, and around 1. For x <= 0.9 use lgamma(x) = lgamma(x+1) - ln(x).
        let (mut r, y, branch) = if x <= 0.9 {
            let r = -x.ln();
            if x >= 0.7316 {
                (r, 1.0 - x, 0)
            } else if x >= 0.2316 {
                (r, x - (TC - 1.0), 1)
            } else {
                (r, x, 2)
            }
        } else if x >= 1.7316 {
            (0.0, 2.0 - x, 0)
        } else if x >= 1.2316 {
            (0.0, x - TC, 1)
        } else {
            (0.0, x - 1.0, 2)
        };
        match branch {
            0 => {
                let z = y * y;
                let p1 = A0 + z * (A2 + z * (A4 + z * (A6 + z * (A8 + z * A10))));
                let p2 = z * (A1 + z * (A3 + z * (A5 + z * (A7 + z * (A9 + z * A11)))));
                r += y * p1 + p2 - 0.5 * y;
            }
            1 => {
                let z = y * y;
                let w = z * y;
                let p1 = T0 + w * (T3 + w * (T6 + w * (T9 + w * T12)));
                let p2 = T1 + w * (T4 + w * (T7 + w * (T10 + w * T13)));
                let p3 = T2 + w * (T5 + w * (T8 + w * (T11 + w * T14)));
                let p = z * p1 - (TT - w * (p2 + y * p3));
                r += TF + p;
            }
            _ => {
                let p1 = y * (U0 + y * (U1 + y * (U2 + y * (U3 + y * (U4 + y * U5)))));
                let p2 = 1.0 + y * (V1 + y * (V2 + y * (V3 + y * (V4 + y * V5))));
                r += -0.5 * y + p1 / p2;
            }
        }
        r
    } else if x < 8.0 {
        // lgamma(y+2) = 0.5 y + y P(y)/Q(y) on y in [0,1], then walk the
        // recurrence lgamma(1+s) = ln(s) + lgamma(s) up to x.
        let i = x as i32;
        let y = x - i as f64;
        let p = y * (S0 + y * (S1 + y * (S2 + y * (S3 + y * (S4 + y * (S5 + y * S6))))));
        let q = 1.0 + y * (R1 + y * (R2 + y * (R3 + y * (R4 + y * (R5 + y * R6)))));
        let mut r = 0.5 * y + p / q;
        let mut z = 1.0;
        if i >= 7 {
            z *= y + 6.0;
        }
        if i >= 6 {
            z *= y + 5.0;
        }
        if i >= 5 {
            z *= y + 4.0;
        }
        if i >= 4 {
            z *= y + 3.0;
        }
        if i >= 3 {
            z *= y + 2.0;
            r += z.ln();
        }
        r
    } else if x < 2.8823037615171174e17 {
        // 8 <= x < 2^58: Stirling with a polynomial correction in 1/x.
        let t = x.ln();
        let z = 1.0 / x;
        let y = z * z;
        let w = W0 + z * (W1 + y * (W2 + y * (W3 + y * (W4 + y * (W5 + y * W6)))));
        (x - 0.5) * (t - 1.0) + w
    } else {
        // The correction terms are below rounding.
        x * (x.ln() - 1.0)
    }
}
