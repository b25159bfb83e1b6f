//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::scalar::Real;

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
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Segment<T> {
    let half = T::lit(0.5);
    let centre = half * (a + b);
    let h = half * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let s = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    let value = kronrod * h;
    let error = ((kronrod - gauss) * h).abs();
    Segment { a, b, value, error }
}

/// Outcome of [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

/// Integrates `f` over `[a, b]`, starting from the partition given by
/// `breaks` (points outside `(a, b)` are ignored) and bisecting the segment
/// with the largest error estimate until the total estimate falls below
/// `max(rel_tol·|I|, abs_tol)` or `max_segments` is reached.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    breaks: &[T],
    rel_tol: T,
    abs_tol: T,
    max_segments: usize,
) -> Integral<T> {
    let mut nodes: Vec<T> = Vec::with_capacity(breaks.len() + 2);
    nodes.push(a);
    nodes.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    nodes.push(b);
    nodes.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    nodes.dedup();

    let mut segs: Vec<Segment<T>> = nodes.windows(2).map(|w| gk15(&mut f, w[0], w[1])).collect();
    let mut evaluations = 15 * segs.len();
    loop {
        let value: T = segs.iter().map(|s| s.value).sum();
        let error: T = segs.iter().map(|s| s.error).sum();
        if error <= (rel_tol * value.abs()).max(abs_tol) || segs.len() >= max_segments {
            return Integral {
                value,
                error,
                evaluations,
            };
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).expect("finite errors"))
            .expect("at least one segment");
        let s = segs.swap_remove(worst);
        let mid = T::lit(0.5) * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            // Segment cannot be split further at this precision.
            return Integral {
                value,
                error,
                evaluations,
            };
        }
        segs.push(gk15(&mut f, s.a, mid));
        segs.push(gk15(&mut f, mid, s.b));
        evaluations += 30;
    }
}
