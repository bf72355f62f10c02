//! Protected nodes in the random recursive tree.
//!
//! `p_0 = 1`, `p_k(t) = e^{-t} (exp(int_0^t p_{k-1}) - 1)`, and the limiting
//! fraction of nodes of rank `>= k` is `int_0^inf p_k(t) e^{-t} dt`.

const HORIZON: f64 = 40.0;

/// Grid values of `p_k` on `[0, 40]` with `n` intervals (`n` a multiple of 2).
pub fn rrt_pk_curve(k: u32, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = HORIZON / n as f64;
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let mut p = vec![1.0; n + 1];
    for _ in 0..k {
        let cum = cumulative_integral(&p, h);
        p = ts
            .iter()
            .zip(&cum)
            .map(|(&t, &c)| (-t).exp() * c.exp_m1())
            .collect();
    }
    (ts, p)
}

/// Running integral `int_0^{t_i} f` with fourth-order local rules.
fn cumulative_integral(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        let piece = if n < 3 {
            0.5 * (f[i - 1] + f[i])
        } else if i == 1 {
            (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
        } else if i == n {
            (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n]) / 24.0
        } else {
            (-f[i - 2] + 13.0 * f[i - 1] + 13.0 * f[i] - f[i + 1]) / 24.0
        };
        out[i] = out[i - 1] + h * piece;
    }
    out
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    let mut s = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Limiting fraction of `k`-protected nodes in the random recursive tree.
pub fn rrt_protected(k: u32, tol: f64) -> f64 {
    match k {
        0 => return 1.0,
        1 => return 0.5,
        2 => return 0.5 - (-1.0f64).exp(),
        _ => {}
    }
    let mut n = 1024usize;
    let mut prev = f64::NAN;
    loop {
        let (ts, p) = rrt_pk_curve(k, n);
        let g: Vec<f64> = ts.iter().zip(&p).map(|(&t, &v)| v * (-t).exp()).collect();
        let val = simpson(&g, HORIZON / n as f64);
        if (val - prev).abs() < tol || n >= 1 << 22 {
            return val;
        }
        prev = val;
        n *= 2;
    }
}
