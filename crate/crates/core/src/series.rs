//! Truncated power series in one variable, enough for expanding blocks in x.

pub(crate) fn mul(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `f^alpha` for a series with positive constant term.
pub(crate) fn pow(f: &[f64], alpha: f64, len: usize) -> Vec<f64> {
    let f0 = f[0];
    let mut g = vec![0.0; len];
    g[0] = f0.powf(alpha);
    for n in 1..len {
        let mut acc = 0.0;
        for k in 1..=n.min(f.len() - 1) {
            acc += (alpha * k as f64 - (n - k) as f64) * f[k] * g[n - k];
        }
        g[n] = acc / (n as f64 * f0);
    }
    g
}

/// Evaluate `sum_k c_k y(x)^k` where `y` has zero constant term.
pub(crate) fn compose(coeffs: &[f64], y: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut power = vec![0.0; len];
    power[0] = 1.0;
    for &c in coeffs {
        for (o, p) in out.iter_mut().zip(&power) {
            *o += c * p;
        }
        power = mul(&power, y, len);
    }
    out
}

/// Nome `q(x)` as a series in `x`, from `x = θ2(q)^4 / θ3(q)^4`.
pub(crate) fn nome_series(len: usize) -> Vec<f64> {
    let theta_series = |q: &[f64]| {
        // A(q) = sum_{n>=0} q^{n(n+1)}, θ3(q) = 1 + 2 sum_{n>=1} q^{n²}
        let mut a_coeffs = vec![0.0; len];
        let mut t_coeffs = vec![0.0; len];
        let mut n = 0usize;
        while n * (n + 1) < len {
            a_coeffs[n * (n + 1)] += 1.0;
            n += 1;
        }
        t_coeffs[0] = 1.0;
        let mut n = 1usize;
        while n * n < len {
            t_coeffs[n * n] += 2.0;
            n += 1;
        }
        (compose(&a_coeffs, q, len), compose(&t_coeffs, q, len))
    };
    let mut q = vec![0.0; len];
    if len > 1 {
        q[1] = 1.0 / 16.0;
    }
    for _ in 0..len {
        let (a, t) = theta_series(&q);
        // q = x θ3^4 / (16 A^4)
        let ratio = mul(&pow(&t, 4.0, len), &pow(&a, -4.0, len), len);
        let mut next = vec![0.0; len];
        for i in 1..len {
            next[i] = ratio[i - 1] / 16.0;
        }
        q = next;
    }
    q
}
