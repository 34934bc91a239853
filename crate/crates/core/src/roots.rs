//! Polynomial roots by Aberth-Ehrlich iteration, with multiple roots grouped into clusters.

use crate::signal::C64;

const MAX_ITER: usize = 500;
const CLUSTER_RADIUS: f64 = 5e-3;
const CLUSTER_RESIDUAL: f64 = 1e-10;

/// Horner evaluation of `sum_k c[k] z^k`.
pub fn eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// `sum_k |c[k]| |z|^k`, the rounding scale of `eval`.
fn eval_scale(coeffs: &[C64], z: C64) -> f64 {
    let r = z.norm();
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

pub fn derivative(coeffs: &[C64]) -> Vec<C64> {
    coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

/// All roots of `sum_k coeffs[k] z^k` with multiplicity. The leading coefficient must be nonzero.
pub fn roots(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    assert!(lead.norm() > 0.0, "leading coefficient vanishes");
    if n == 1 {
        return vec![-coeffs[0] / lead];
    }
    let d = derivative(coeffs);
    let radius = (coeffs[0].norm() / lead.norm()).powf(1.0 / n as f64).max(f64::MIN_POSITIVE);
    let mut z: Vec<C64> =
        (0..n).map(|k| C64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.4)).collect();
    let mut done = vec![false; n];
    for _ in 0..MAX_ITER {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let p = eval(coeffs, z[i]);
            if p.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = p / eval(&d, z[i]);
            let repulsion: C64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(1e-300) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    z
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootCluster {
    pub center: C64,
    pub multiplicity: usize,
}

/// Roots grouped into clusters of numerically coincident roots. A group is kept only when its
/// centroid, refined as a simple root of the `(m - 1)`-th derivative, annihilates the polynomial
/// to relative precision; otherwise its members stay separate.
pub fn clustered_roots(coeffs: &[C64]) -> Vec<RootCluster> {
    let z = roots(coeffs);
    let n = z.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (z[i] - z[j]).norm() <= CLUSTER_RADIUS * z[i].norm().max(1.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    let mut out = Vec::with_capacity(n);
    for g in groups {
        let m = g.len();
        if m == 1 {
            out.push(RootCluster { center: z[g[0]], multiplicity: 1 });
            continue;
        }
        let centroid = g.iter().map(|&i| z[i]).sum::<C64>() / m as f64;
        let center = refine_multiple(coeffs, centroid, m);
        let scale = eval_scale(coeffs, center);
        if eval(coeffs, center).norm() <= CLUSTER_RESIDUAL * scale {
            out.push(RootCluster { center, multiplicity: m });
        } else {
            out.extend(g.iter().map(|&i| RootCluster { center: z[i], multiplicity: 1 }));
        }
    }
    out
}

/// Newton refinement of an `m`-fold root as a simple root of the `(m - 1)`-th derivative.
fn refine_multiple(coeffs: &[C64], start: C64, m: usize) -> C64 {
    let mut d = coeffs.to_vec();
    for _ in 1..m {
        d = derivative(&d);
    }
    let dd = derivative(&d);
    let mut z = start;
    for _ in 0..8 {
        let den = eval(&dd, z);
        if den.norm() == 0.0 {
            break;
        }
        let step = eval(&d, z) / den;
        if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 1e-2 * z.norm().max(1.0) {
            break;
        }
        z -= step;
        if step.norm() <= f64::EPSILON * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Monic coefficients of `prod_i (z - r_i)`, lowest degree first.
pub fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
    let mut c = vec![C64::new(1.0, 0.0)];
    for r in roots {
        c.push(C64::new(0.0, 0.0));
        for k in (1..c.len()).rev() {
            c[k] = c[k - 1] - r * c[k];
        }
        c[0] = -r * c[0];
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close_sets(mut a: Vec<C64>, mut b: Vec<C64>, tol: f64) -> bool {
        let key = |z: &C64| (z.re * 1e6).round() as i64 * 10_000_000 + (z.im * 1e6).round() as i64;
        a.sort_by_key(key);
        b.sort_by_key(key);
        a.iter().zip(&b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn product_expansion() {
        let c = poly_from_roots(&[C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        assert_eq!(c, vec![C64::new(2.0, 0.0), C64::new(-3.0, 0.0), C64::new(1.0, 0.0)]);
    }

    #[test]
    fn simple_roots_found() {
        let r = vec![C64::new(0.5, 0.2), C64::new(-2.0, 1.0), C64::new(0.0, -0.7), C64::new(3.0, 0.0)];
        let found = roots(&poly_from_roots(&r));
        assert!(close_sets(found, r, 1e-12));
    }

    #[test]
    fn quadruple_root_is_clustered() {
        let r = [C64::new(-1.0, 0.0); 4]
            .into_iter()
            .chain([C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.3, 0.4)])
            .collect::<Vec<_>>();
        let mut cl = clustered_roots(&poly_from_roots(&r));
        cl.sort_by_key(|a| a.multiplicity);
        assert_eq!(cl.len(), 3);
        assert_eq!(cl[0].multiplicity, 1);
        assert_eq!(cl[1].multiplicity, 2);
        assert_eq!(cl[2].multiplicity, 4);
        assert!((cl[1].center - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((cl[2].center + C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn close_but_distinct_roots_stay_apart() {
        let r = vec![C64::new(1.0, 0.0), C64::new(1.001, 0.0), C64::new(-0.5, 0.5)];
        let cl = clustered_roots(&poly_from_roots(&r));
        assert_eq!(cl.len(), 3);
        assert!(cl.iter().all(|c| c.multiplicity == 1));
    }
}
