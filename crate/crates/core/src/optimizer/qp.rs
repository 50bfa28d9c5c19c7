use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Minimizes `g^T d + d^T B d / 2` over `lo <= d <= hi` with a primal
/// active-set method. `B` must be symmetric positive definite and the box
/// must contain the origin.
pub fn solve_box_qp(b: &DMatrix<f64>, g: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    let n = g.len();
    let mut d = DVector::zeros(n);
    let mut state = vec![Bound::Free; n];
    for i in 0..n {
        if lo[i] >= 0.0 && g[i] > 0.0 {
            state[i] = Bound::Lower;
        } else if hi[i] <= 0.0 && g[i] < 0.0 {
            state[i] = Bound::Upper;
        }
    }
    for _ in 0..(4 * n + 10) {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == Bound::Free).collect();
        let mut candidate = d.clone();
        for i in 0..n {
            match state[i] {
                Bound::Lower => candidate[i] = lo[i],
                Bound::Upper => candidate[i] = hi[i],
                Bound::Free => {}
            }
        }
        if !free.is_empty() {
            let m = free.len();
            let mut bff = DMatrix::zeros(m, m);
            let mut rhs = DVector::zeros(m);
            for (a, &i) in free.iter().enumerate() {
                let mut r = -g[i];
                for j in 0..n {
                    if state[j] != Bound::Free {
                        r -= b[(i, j)] * candidate[j];
                    }
                }
                rhs[a] = r;
                for (c, &j) in free.iter().enumerate() {
                    bff[(a, c)] = b[(i, j)];
                }
            }
            let sol = match bff.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => {
                    let shift = 1e-10 * (1.0 + bff.diagonal().amax());
                    match (bff + DMatrix::identity(m, m) * shift).cholesky() {
                        Some(ch) => ch.solve(&rhs),
                        None => return d,
                    }
                }
            };
            for (a, &i) in free.iter().enumerate() {
                candidate[i] = sol[a];
            }
        }

        // Walk from d toward the candidate until a free variable hits a bound.
        let step = &candidate - &d;
        let mut alpha = 1.0;
        let mut blocking = None;
        for &i in &free {
            if step[i] < 0.0 && d[i] + step[i] < lo[i] {
                let a = (lo[i] - d[i]) / step[i];
                if a < alpha {
                    alpha = a;
                    blocking = Some((i, Bound::Lower));
                }
            } else if step[i] > 0.0 && d[i] + step[i] > hi[i] {
                let a = (hi[i] - d[i]) / step[i];
                if a < alpha {
                    alpha = a;
                    blocking = Some((i, Bound::Upper));
                }
            }
        }
        d += &step * alpha.max(0.0);
        if let Some((i, side)) = blocking {
            d[i] = if side == Bound::Lower { lo[i] } else { hi[i] };
            state[i] = side;
            continue;
        }

        // Release the fixed variable whose multiplier has the wrong sign.
        let grad = b * &d + g;
        let mut worst = None;
        let mut worst_val = 0.0;
        for i in 0..n {
            let wrong = match state[i] {
                Bound::Lower => -grad[i],
                Bound::Upper => grad[i],
                Bound::Free => 0.0,
            };
            if wrong > worst_val + 1e-14 * (1.0 + grad[i].abs()) {
                worst_val = wrong;
                worst = Some(i);
            }
        }
        match worst {
            Some(i) => state[i] = Bound::Free,
            None => break,
        }
    }
    for i in 0..n {
        d[i] = d[i].clamp(lo[i], hi[i]);
    }
    d
}
