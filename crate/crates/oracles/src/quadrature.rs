//! Adaptive Gauss–Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate, error estimate and `∫|f|` on `[a, b]`.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (lo, hi) = (f(c - dx), f(c + dx));
        kronrod += WGK[j] * (lo + hi);
        abs += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), abs * h.abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err, abs) = gk15(f, a, b);
    // below this the error estimate is dominated by round-off
    let floor = 50.0 * f64::EPSILON * abs;
    if err <= tol.max(floor) || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

const PANELS: usize = 64;

fn panels(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let h = (b - a) / PANELS as f64;
    (0..PANELS).map(move |i| (a + i as f64 * h, if i + 1 == PANELS { b } else { a + (i + 1) as f64 * h }))
}

fn magnitude(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    panels(a, b).map(|(lo, hi)| gk15(f, lo, hi).2).sum()
}

fn integrate_abs(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    let tol = abs_tol / PANELS as f64;
    panels(a, b).map(|(lo, hi)| adapt(f, lo, hi, tol, 30)).sum()
}

/// `∫_a^b f` to roughly `rel_tol·∫|f|`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    integrate_with_breaks(f, a, b, &[], rel_tol)
}

/// As [`integrate`], splitting at interior break points (kinks).
pub fn integrate_with_breaks(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], rel_tol: f64) -> f64 {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let scale: f64 = pts.windows(2).map(|w| magnitude(&f, w[0], w[1])).sum();
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE) / (pts.len() - 1) as f64;
    pts.windows(2).map(|w| integrate_abs(&f, w[0], w[1], tol)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_oscillatory() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14);
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
        let v = integrate(|x| (40.0 * x).cos().powi(2), 0.0, std::f64::consts::PI, 1e-14);
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let v = integrate_with_breaks(|x: f64| (-x.abs()).exp(), -1.0, 2.0, &[0.0], 1e-14);
        let exact = (1.0 - (-1.0f64).exp()) + (1.0 - (-2.0f64).exp());
        assert!((v - exact).abs() < 1e-13);
    }
}
