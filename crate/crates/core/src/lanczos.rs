//! Lowest eigenpairs of sparse Hermitian operators.
//!
//! The Krylov engine is a thick-restart Lanczos iteration with full
//! reorthogonalization. When a reverse Cuthill-McKee ordering gives the
//! operator a narrow band, the engine runs on the shift-inverted operator
//! `(H − σ)^{-1}`, with `σ` placed just below the ground energy by bisection
//! on the inertia of a banded `LDLᴴ` factorization.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::seed::Seed;
use crate::sparse::SparseOperator;

type C64 = Complex<f64>;

/// Largest band storage (complex entries) the shift-invert path will allocate.
pub const BAND_BUDGET: usize = 1 << 23;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Shift-invert when the band fits [`BAND_BUDGET`], plain otherwise.
    Auto,
    Plain,
    ShiftInvert,
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Required residual `‖Hv − λv‖` of the ground pair.
    pub tol: f64,
    /// Cap on operator applications.
    pub max_iter: usize,
    /// Krylov basis size before a thick restart.
    pub basis: usize,
    pub seed: Seed,
    pub start: Option<Vec<C64>>,
    pub strategy: Strategy,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-9,
            max_iter: 20_000,
            basis: 48,
            seed: Seed::from_u64(0),
            start: None,
            strategy: Strategy::Auto,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub vector: Vec<C64>,
    /// `λ₂ − λ₁`; infinite for one-dimensional operators.
    pub gap: f64,
    pub second_energy: f64,
    /// `‖Hv − λv‖` with `λ` the Rayleigh quotient of `v`.
    pub residual: f64,
    pub iterations: usize,
    pub shift_inverted: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn scale(x: &mut [C64], a: f64) {
    for v in x {
        *v *= a;
    }
}

fn random_vector(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

/// Orthogonalizes `u` against `basis` twice; returns the remaining norm.
fn orthogonalize(u: &mut [C64], basis: &[Vec<C64>]) -> f64 {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, u);
            axpy(u, -c, v);
        }
    }
    norm(u)
}

/// Combines basis vectors: `Σ_k coeffs[k]·basis[k]`.
fn combine(basis: &[Vec<C64>], coeffs: impl Iterator<Item = C64>) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); basis[0].len()];
    for (v, c) in basis.iter().zip(coeffs) {
        axpy(&mut out, c, v);
    }
    out
}

struct Extremes {
    values: Vec<f64>,
    vectors: Vec<Vec<C64>>,
    iterations: usize,
}

/// Thick-restart Lanczos for the `want` lowest (or highest) eigenpairs of the
/// Hermitian map `apply`.
#[allow(clippy::too_many_arguments)]
fn krylov_extremes(
    apply: &mut dyn FnMut(&[C64], &mut [C64]),
    dim: usize,
    start: Vec<C64>,
    want: usize,
    highest: bool,
    opts: &LanczosOptions,
    accept: &dyn Fn(usize, f64, f64) -> bool,
    rng: &mut impl Rng,
) -> Result<Extremes> {
    let want = want.min(dim);
    let cap = opts.basis.max(want + 4).min(dim);
    let keep = (want + 6).min(cap.saturating_sub(2)).max(want);
    let mut v_basis: Vec<Vec<C64>> = Vec::with_capacity(cap);
    let mut w_basis: Vec<Vec<C64>> = Vec::with_capacity(cap);
    let mut t = DMatrix::<C64>::zeros(0, 0);
    let mut next = start;
    let mut nrm = orthogonalize(&mut next, &[]);
    if !(nrm > 0.0) {
        return Err(invalid("start vector is zero"));
    }
    scale(&mut next, 1.0 / nrm);
    let mut iterations = 0;
    let mut scale_est = 0.0f64;
    loop {
        let mut w = vec![C64::new(0.0, 0.0); dim];
        apply(&next, &mut w);
        iterations += 1;
        let k = v_basis.len();
        let mut grown = DMatrix::<C64>::zeros(k + 1, k + 1);
        grown.view_mut((0, 0), (k, k)).copy_from(&t);
        for (i, v) in v_basis.iter().enumerate() {
            let c = dot(v, &w);
            grown[(i, k)] = c;
            grown[(k, i)] = c.conj();
        }
        grown[(k, k)] = C64::new(dot(&next, &w).re, 0.0);
        t = grown;
        v_basis.push(next);
        w_basis.push(w.clone());

        let eig = SymmetricEigen::new(t.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (eig.eigenvalues[a], eig.eigenvalues[b]);
            if highest {
                y.total_cmp(&x)
            } else {
                x.total_cmp(&y)
            }
        });
        scale_est = scale_est.max(eig.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs())));

        let ritz = |j: usize| -> (f64, Vec<C64>, f64) {
            let col = order[j];
            let theta = eig.eigenvalues[col];
            let s = eig.eigenvectors.column(col);
            let y = combine(&v_basis, s.iter().copied());
            let mut r = combine(&w_basis, s.iter().copied());
            axpy(&mut r, C64::new(-theta, 0.0), &y);
            (theta, y, norm(&r))
        };
        let found = order.len().min(want);
        let pairs: Vec<_> = (0..found).map(ritz).collect();
        let converged = found == want && pairs.iter().enumerate().all(|(j, p)| accept(j, p.0, p.2));

        // continuation vector
        let mut u = w;
        nrm = orthogonalize(&mut u, &v_basis);
        let breakdown = nrm <= 1e-12 * scale_est.max(1.0);
        if converged || (breakdown && v_basis.len() == dim) {
            return Ok(Extremes {
                values: pairs.iter().map(|p| p.0).collect(),
                vectors: pairs.into_iter().map(|p| p.1).collect(),
                iterations,
            });
        }
        if iterations >= opts.max_iter {
            let worst = pairs.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
            return Err(Error::NonConvergence {
                iterations,
                residual: worst,
            });
        }
        if breakdown {
            // invariant subspace without the wanted pairs: continue elsewhere
            u = random_vector(dim, rng);
            nrm = orthogonalize(&mut u, &v_basis);
        }
        scale(&mut u, 1.0 / nrm);

        if v_basis.len() == cap {
            let kept: Vec<usize> = order.iter().take(keep).copied().collect();
            let new_v: Vec<Vec<C64>> = kept
                .iter()
                .map(|&c| combine(&v_basis, eig.eigenvectors.column(c).iter().copied()))
                .collect();
            let new_w: Vec<Vec<C64>> = kept
                .iter()
                .map(|&c| combine(&w_basis, eig.eigenvectors.column(c).iter().copied()))
                .collect();
            t = DMatrix::from_fn(kept.len(), kept.len(), |i, j| {
                if i == j {
                    C64::new(eig.eigenvalues[kept[i]], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            v_basis = new_v;
            w_basis = new_w;
            // the continuation is orthogonal to the old basis, hence to its span
            orthogonalize(&mut u, &v_basis);
            let n2 = norm(&u);
            scale(&mut u, 1.0 / n2);
        }
        next = u;
    }
}

/// Reverse Cuthill-McKee ordering of the operator's sparsity graph; returns
/// `order[new] = old`.
pub fn rcm_order(h: &SparseOperator<C64>) -> Vec<usize> {
    let n = h.dim();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|r| h.row(r).map(|(c, _)| c).filter(|&c| c != r).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    let bfs = |root: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| -> usize {
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        let mut last = root;
        while let Some(v) = queue.pop_front() {
            out.push(v);
            last = v;
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nb.sort_by_key(|&u| (degree[u], u));
            for u in nb {
                visited[u] = true;
                queue.push_back(u);
            }
        }
        last
    };
    for &root in &by_degree {
        if visited[root] {
            continue;
        }
        // one pass to find a far node, then order from it
        let mut probe_seen = visited.clone();
        let mut probe = Vec::new();
        let far = bfs(root, &mut probe_seen, &mut probe);
        bfs(far, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// Half-bandwidth of `h` under `order`.
pub fn bandwidth(h: &SparseOperator<C64>, order: &[usize]) -> usize {
    let mut pos = vec![0usize; order.len()];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    h.triplets()
        .map(|(r, c, _)| pos[r].abs_diff(pos[c]))
        .max()
        .unwrap_or(0)
}

/// `P (H − σ) Pᵀ = L D Lᴴ` with `L` unit lower banded.
pub struct BandedLdl {
    n: usize,
    b: usize,
    order: Vec<usize>,
    /// Row `i` holds `L[i][i-b..i]` at `l[i*b .. (i+1)*b]`.
    l: Vec<C64>,
    d: Vec<f64>,
}

impl BandedLdl {
    /// Factorizes `H − σ`; `None` if it is not positive definite.
    pub fn factor(h: &SparseOperator<C64>, order: &[usize], b: usize, sigma: f64) -> Option<Self> {
        let n = h.dim();
        let mut pos = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        let mut l = vec![C64::new(0.0, 0.0); n * b];
        let mut diag = vec![-sigma; n];
        for (r, c, v) in h.triplets() {
            let (i, j) = (pos[r], pos[c]);
            if i == j {
                diag[i] = v.re - sigma;
            } else if j < i {
                l[i * b + (j + b - i)] = v;
            }
        }
        let mut d = vec![0.0f64; n];
        for i in 0..n {
            let lo = i.saturating_sub(b);
            for j in lo..i {
                let klo = lo.max(j.saturating_sub(b));
                let mut s = l[i * b + (j + b - i)];
                for k in klo..j {
                    s -= l[i * b + (k + b - i)] * l[j * b + (k + b - j)].conj() * d[k];
                }
                l[i * b + (j + b - i)] = s / d[j];
            }
            let mut di = diag[i];
            for k in lo..i {
                di -= l[i * b + (k + b - i)].norm_sqr() * d[k];
            }
            if !(di > 0.0) {
                return None;
            }
            d[i] = di;
        }
        Some(BandedLdl {
            n,
            b,
            order: order.to_vec(),
            l,
            d,
        })
    }

    /// Solves `(H − σ) x = y`.
    #[allow(clippy::needless_range_loop)] // banded index arithmetic reads clearer than iterators
    pub fn solve(&self, y: &[C64], x: &mut [C64]) {
        let (n, b) = (self.n, self.b);
        let mut z: Vec<C64> = self.order.iter().map(|&old| y[old]).collect();
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let mut s = z[i];
            for k in lo..i {
                s -= self.l[i * b + (k + b - i)] * z[k];
            }
            z[i] = s;
        }
        for (zi, di) in z.iter_mut().zip(&self.d) {
            *zi /= *di;
        }
        for i in (0..n).rev() {
            let hi = (i + b).min(n - 1);
            let mut s = z[i];
            for k in i + 1..=hi {
                s -= self.l[k * b + (i + b - k)].conj() * z[k];
            }
            z[i] = s;
        }
        for (new, &old) in self.order.iter().enumerate() {
            x[old] = z[new];
        }
    }
}

fn residual(h: &SparseOperator<C64>, v: &[C64]) -> (f64, f64) {
    let hv = h.matvec(v);
    let lambda = dot(v, &hv).re / dot(v, v).re;
    let r: f64 = hv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (lambda, r)
}

pub fn ground_state(h: &SparseOperator<C64>, tol: f64) -> Result<GroundState> {
    ground_state_with(
        h,
        &LanczosOptions {
            tol,
            ..LanczosOptions::default()
        },
    )
}

pub fn ground_state_with(h: &SparseOperator<C64>, opts: &LanczosOptions) -> Result<GroundState> {
    let dim = h.dim();
    if dim == 0 {
        return Err(invalid("empty operator"));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid(format!("tolerance {} must be positive", opts.tol)));
    }
    if let Some(s) = &opts.start {
        if s.len() != dim {
            return Err(invalid(format!(
                "start vector has length {}, operator {dim}",
                s.len()
            )));
        }
    }
    let defect = h.hermitian_defect();
    if defect > 1e-10 {
        return Err(invalid(format!(
            "operator is not Hermitian (defect {defect:e})"
        )));
    }
    let mut rng = opts.seed.rng();
    let start = opts
        .start
        .clone()
        .unwrap_or_else(|| random_vector(dim, &mut rng));

    let use_si = match opts.strategy {
        Strategy::Plain => None,
        Strategy::ShiftInvert | Strategy::Auto => {
            let order = rcm_order(h);
            let b = bandwidth(h, &order);
            let fits = dim.saturating_mul(b.max(1)) <= BAND_BUDGET;
            if fits {
                Some((order, b))
            } else if opts.strategy == Strategy::ShiftInvert {
                return Err(Error::BudgetExceeded {
                    what: "banded factorization (entries)",
                    size: (dim as u128) * (b as u128),
                    limit: BAND_BUDGET as u128,
                });
            } else {
                None
            }
        }
    };

    let (values, vectors, iterations, shift_inverted) = match use_si {
        None => {
            let mut apply = |x: &[C64], y: &mut [C64]| h.apply(x, y);
            let accept = |_: usize, _: f64, r: f64| r <= opts.tol;
            let e = krylov_extremes(&mut apply, dim, start, 2, false, opts, &accept, &mut rng)?;
            (e.values, e.vectors, e.iterations, false)
        }
        Some((order, b)) => {
            let (lo, hi) = h.gershgorin();
            let width = (hi - lo).max(1.0);
            // bracket λ₁ between a definite shift and an indefinite one
            let mut below = lo - 1e-6 * width;
            let mut above = residual(h, &start).0;
            let mut fact = BandedLdl::factor(h, &order, b, below)
                .ok_or_else(|| invalid("Gershgorin shift failed to factor"))?;
            let mut steps = 0;
            while above - below > 1e-9 * width && steps < 200 {
                let mid = 0.5 * (above + below);
                match BandedLdl::factor(h, &order, b, mid) {
                    Some(f) => {
                        below = mid;
                        fact = f;
                    }
                    None => above = mid,
                }
                steps += 1;
            }
            let sigma = below;
            let mut apply = |x: &[C64], y: &mut [C64]| fact.solve(x, y);
            // For a Ritz pair (θ, y) with residual r: ‖(H − σ)y − y/θ‖ ≤ ‖H − σ‖·r/θ,
            // and the error of σ + 1/θ is at most r/θ². The second pair only feeds
            // the gap, so it is resolved to a millionth of the gap.
            let norm_shifted = hi - sigma;
            let theta_top = std::cell::Cell::new(f64::INFINITY);
            let accept = |j: usize, theta: f64, r: f64| {
                if j == 0 {
                    theta_top.set(theta);
                    r * norm_shifted <= 0.1 * opts.tol * theta.abs()
                } else {
                    let gap = 1.0 / theta - 1.0 / theta_top.get();
                    r <= (0.1 * opts.tol).max(1e-6 * gap) * theta * theta
                }
            };
            let e = krylov_extremes(&mut apply, dim, start, 2, true, opts, &accept, &mut rng)?;
            let values = e.values.iter().map(|th| sigma + 1.0 / th).collect();
            (values, e.vectors, e.iterations, true)
        }
    };

    let mut v = vectors[0].clone();
    let nv = norm(&v);
    scale(&mut v, 1.0 / nv);
    // fix the global phase: largest component real and positive
    if let Some(big) = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
    {
        let ph = big.conj() / big.norm();
        for z in v.iter_mut() {
            *z *= ph;
        }
    }
    let (energy, res) = residual(h, &v);
    let second = if values.len() > 1 {
        match vectors.get(1) {
            Some(v2) => residual(h, v2).0,
            None => values[1],
        }
    } else {
        f64::INFINITY
    };
    if res > opts.tol {
        return Err(Error::NonConvergence {
            iterations,
            residual: res,
        });
    }
    Ok(GroundState {
        energy,
        vector: v,
        gap: second - energy,
        second_energy: second,
        residual: res,
        iterations,
        shift_inverted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn diag(vals: &[f64]) -> SparseOperator<C64> {
        SparseOperator::diagonal(&vals.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>())
            .unwrap()
    }

    fn path(n: usize) -> SparseOperator<C64> {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(
                i,
                i,
                C64::new(if i == 0 || i == n - 1 { 0.5 } else { 1.0 }, 0.0),
            );
            if i + 1 < n {
                b.add_hermitian_pair(i, i + 1, C64::new(-0.5, 0.0));
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn diagonal_spectrum() {
        let h = diag(&(0..50).map(|i| i as f64).collect::<Vec<_>>());
        for s in [Strategy::Plain, Strategy::ShiftInvert] {
            let g = ground_state_with(
                &h,
                &LanczosOptions {
                    strategy: s,
                    tol: 1e-10,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(g.energy.abs() < 1e-10, "{s:?}");
            assert!((g.gap - 1.0).abs() < 1e-8, "{s:?}");
        }
    }

    #[test]
    fn pauli_x() {
        let mut b = TripletBuilder::new(2);
        b.add_hermitian_pair(0, 1, C64::new(1.0, 0.0));
        let h = b.build().unwrap();
        let g = ground_state(&h, 1e-12).unwrap();
        assert!((g.energy + 1.0).abs() < 1e-12);
        assert!((g.gap - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path_laplacian_small_gap() {
        let n = 800;
        let h = path(n);
        let expected_gap = 1.0 - (std::f64::consts::PI / n as f64).cos();
        let g = ground_state(&h, 1e-10).unwrap();
        assert!(g.shift_inverted);
        assert!(g.energy.abs() < 1e-10);
        assert!(
            (g.gap - expected_gap).abs() < 1e-9 * expected_gap.max(1.0),
            "{} vs {expected_gap}",
            g.gap
        );
        // ground vector is uniform
        let u = 1.0 / (n as f64).sqrt();
        assert!(g
            .vector
            .iter()
            .all(|z| (z.re - u).abs() < 1e-6 && z.im.abs() < 1e-6));
    }

    #[test]
    fn plain_restarts_on_moderate_problem() {
        let h = path(120);
        let g = ground_state_with(
            &h,
            &LanczosOptions {
                strategy: Strategy::Plain,
                tol: 1e-8,
                basis: 30,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(g.energy.abs() < 1e-10);
    }

    #[test]
    fn invariant_start_subspace() {
        // start inside the span of the first two basis vectors of a block-diagonal operator
        let h = diag(&[2.0, 3.0, 1e8, 1e8 + 1.0]);
        let start = vec![
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ];
        let g = ground_state_with(
            &h,
            &LanczosOptions {
                strategy: Strategy::Plain,
                start: Some(start),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((g.energy - 2.0).abs() < 1e-12);
        assert!((g.gap - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ldl_solve_matches_matvec() {
        let h = path(40);
        let order = rcm_order(&h);
        let b = bandwidth(&h, &order);
        assert_eq!(b, 1);
        let f = BandedLdl::factor(&h, &order, b, -0.3).unwrap();
        let y: Vec<C64> = (0..40).map(|i| C64::new(i as f64, 1.0)).collect();
        let mut x = vec![C64::new(0.0, 0.0); 40];
        f.solve(&y, &mut x);
        let back = h.matvec(&x);
        for i in 0..40 {
            assert!((back[i] + x[i] * 0.3 - y[i]).norm() < 1e-9);
        }
        assert!(BandedLdl::factor(&h, &order, b, 0.1).is_none());
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = SparseOperator::from_triplets(2, vec![(0, 1, C64::new(1.0, 0.0))]).unwrap();
        assert!(ground_state(&h, 1e-8).is_err());
    }
}
