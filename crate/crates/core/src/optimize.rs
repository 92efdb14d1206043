//! Derivative-free local minimizers used to refine coarse-grid optima.

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping when the
/// bracket is shorter than `tol`. Returns the best evaluated point.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Nelder-Mead on the box `[lower, upper]` (vertices are clamped), starting
/// from a simplex of edge `step` around `x0`. Stops when every vertex lies
/// within `tol` of the best one, or after `max_iter` iterations; one restart
/// from the best vertex guards against simplex collapse.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    lower: &[f64],
    upper: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let mut best = (x0.to_vec(), f(x0));
    let mut scale = step;
    for _ in 0..2 {
        let out = nm_run(&mut f, &best.0, scale, lower, upper, tol, max_iter);
        if out.1 <= best.1 {
            best = out;
        }
        scale = (scale * 0.1).max(10.0 * tol);
    }
    best
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn nm_run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: f64,
    lower: &[f64],
    upper: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for d in 0..n {
        let mut v = x0.to_vec();
        v[d] += step;
        if v[d] > upper[d] {
            v[d] = x0[d] - step;
        }
        clamp(&mut v, lower, upper);
        simplex.push(v);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= tol {
            break;
        }
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect();
            clamp(&mut p, lower, upper);
            p
        };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let p = along(0.5);
            let v = f(&p);
            (p, v)
        } else {
            let p = along(-0.5);
            let v = f(&p);
            (p, v)
        };
        if fc < vals[n].min(fr) {
            simplex[n] = xc;
            vals[n] = fc;
            continue;
        }
        let b = simplex[0].clone();
        for i in 1..=n {
            let mut p: Vec<f64> = simplex[i].iter().zip(&b).map(|(x, y)| y + 0.5 * (x - y)).collect();
            clamp(&mut p, lower, upper);
            vals[i] = f(&p);
            simplex[i] = p;
        }
    }
    let (i, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty simplex");
    (simplex[i].clone(), vals[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, _) = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-12, 500);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + 0.5 * (x[0] - 1.0) * (x[1] + 0.5);
        let (x, _) = nelder_mead(f, &[0.0, 0.0], 0.5, &[-5.0, -5.0], &[5.0, 5.0], 1e-12, 5000);
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] + 0.5).abs() < 1e-9, "{x:?}");
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let (x, _) = nelder_mead(|x: &[f64]| (x[0] - 3.0).powi(2), &[0.0], 0.5, &[-1.0], &[1.0], 1e-12, 1000);
        assert!((x[0] - 1.0).abs() < 1e-9);
    }
}
