//! Slice activations. `f64` uses libm; `f32` uses a branch-free Cephes-style
//! `exp` that the compiler vectorizes (relative error a few ulp).

const LOG2E: f32 = std::f32::consts::LOG2_E;
const LN2_HI: f32 = 0.693_359_4;
const LN2_LO: f32 = -2.121_944_4e-4;

#[inline(always)]
fn exp_f32(x: f32) -> f32 {
    let x = x.clamp(-87.0, 88.0);
    let t = x * LOG2E;
    let k = (t + if t >= 0.0 { 0.5 } else { -0.5 }) as i32;
    let kf = k as f32;
    let r = x - kf * LN2_HI - kf * LN2_LO;
    let p = 1.987_569_1e-4;
    let p = p * r + 1.398_199_9e-3;
    let p = p * r + 8.333_452e-3;
    let p = p * r + 4.166_579_6e-2;
    let p = p * r + 1.666_666_5e-1;
    let p = p * r + 5e-1;
    let y = p * r * r + r + 1.0;
    y * f32::from_bits(((k + 127) as u32) << 23)
}

#[inline(always)]
fn sigmoid_body(xs: &mut [f32]) {
    for x in xs {
        *x = 1.0 / (1.0 + exp_f32(-*x));
    }
}

#[inline(always)]
fn tanh_body(xs: &mut [f32]) {
    for x in xs {
        *x = 2.0 / (1.0 + exp_f32(-2.0 * *x)) - 1.0;
    }
}

#[cfg(target_arch = "x86_64")]
mod wide {
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn sigmoid(xs: &mut [f32]) {
        super::sigmoid_body(xs)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn tanh(xs: &mut [f32]) {
        super::tanh_body(xs)
    }

    pub(super) fn available() -> bool {
        is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma")
    }
}

pub(crate) fn sigmoid_f32(xs: &mut [f32]) {
    #[cfg(target_arch = "x86_64")]
    if wide::available() {
        // SAFETY: the required CPU features were detected at runtime.
        return unsafe { wide::sigmoid(xs) };
    }
    sigmoid_body(xs)
}

pub(crate) fn tanh_f32(xs: &mut [f32]) {
    #[cfg(target_arch = "x86_64")]
    if wide::available() {
        // SAFETY: the required CPU features were detected at runtime.
        return unsafe { wide::tanh(xs) };
    }
    tanh_body(xs)
}

pub(crate) fn sigmoid_f64(xs: &mut [f64]) {
    for x in xs {
        *x = 1.0 / (1.0 + (-*x).exp());
    }
}

pub(crate) fn tanh_f64(xs: &mut [f64]) {
    for x in xs {
        *x = x.tanh();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_exp_accuracy() {
        let mut worst = 0.0f64;
        let mut x = -80.0f32;
        while x < 80.0 {
            let exact = (x as f64).exp();
            worst = worst.max(((exp_f32(x) as f64) - exact).abs() / exact);
            x += 0.0137;
        }
        assert!(worst < 5e-7, "{worst}");
        assert_eq!(exp_f32(0.0), 1.0);
        assert!(exp_f32(-1000.0) >= 0.0 && exp_f32(-1000.0) < 1e-37);
        assert!(exp_f32(1000.0).is_finite());
    }

    #[test]
    fn activations_match_libm() {
        let xs: Vec<f32> = (-400..400).map(|i| i as f32 * 0.05).collect();
        let mut s = xs.clone();
        let mut t = xs.clone();
        sigmoid_f32(&mut s);
        tanh_f32(&mut t);
        for ((&x, &s), &t) in xs.iter().zip(&s).zip(&t) {
            let x = x as f64;
            assert!((s as f64 - 1.0 / (1.0 + (-x).exp())).abs() < 2e-7);
            assert!((t as f64 - x.tanh()).abs() < 4e-7);
            assert!((-1.0..=1.0).contains(&t) && (0.0..=1.0).contains(&s));
        }
    }
}
