//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use dccm::geodesic::{energy_gradient, path_energy_of};
use dccm::poly::{monomial_basis, Polynomial};
use dccm::sdp::{LinearEquality, LmiBlock, SdpProblem};
use dccm::synth::{synthesize, CertificateTemplate, DccmCertificate, SynthOptions};
use dccm::system::{cstr_preset, ControlAffineSystem};
use nalgebra::DMatrix;

/// The degree-2, beta = 0.1 CSTR certificate, synthesized once per test binary.
pub fn cstr_certificate() -> &'static DccmCertificate {
    static CERT: OnceLock<DccmCertificate> = OnceLock::new();
    CERT.get_or_init(|| {
        let tmpl = CertificateTemplate::uniform(2, 1, 2, 0.1).unwrap();
        synthesize(&cstr_preset(), &tmpl, &SynthOptions::default()).expect("CSTR synthesis")
    })
}

/// `W = [[1 + x1^2, 0.2 x1], [0.2 x1, 1 + 0.5 x2^2]]`: positive definite
/// everywhere and far from constant, so geodesics bend.
pub fn curved_certificate() -> DccmCertificate {
    let tmpl = CertificateTemplate::uniform(2, 1, 2, 0.1).unwrap();
    // grlex basis: 1, x1, x2, x1^2, x1 x2, x2^2
    let w = vec![
        vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.2, 0.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.5],
    ];
    let l = vec![vec![-0.5, 0.1, 0.0, 0.0, 0.0, 0.0], vec![0.0; 6]];
    DccmCertificate::new(tmpl, w, l, 0.0).unwrap()
}

pub fn constant_certificate(w: &[f64], l: &[f64]) -> DccmCertificate {
    let n = l.len();
    DccmCertificate::constant(&DMatrix::from_row_slice(n, n, w), &DMatrix::from_row_slice(1, n, l), 0.1, 0.0).unwrap()
}

pub fn scalar_system(a: f64, b: f64) -> ControlAffineSystem {
    ControlAffineSystem::linear(&DMatrix::from_element(1, 1, a), &DMatrix::from_element(1, 1, b)).unwrap()
}

/// Random polynomial in `n_vars` variables of degree at most `degree`.
pub fn dense_poly(n_vars: usize, degree: u32, coeffs: &[f64]) -> Polynomial {
    let basis = monomial_basis(n_vars, degree);
    Polynomial::from_dense(&basis, &coeffs[..basis.len()]).unwrap()
}

/// Central finite-difference gradient of the discrete path energy.
pub fn fd_energy_gradient(cert: &DccmCertificate, x_from: &[f64], deltas: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    let mut grad = vec![vec![0.0; x_from.len()]; deltas.len()];
    for i in 0..deltas.len() {
        for c in 0..x_from.len() {
            let mut plus = deltas.to_vec();
            let mut minus = deltas.to_vec();
            plus[i][c] += h;
            minus[i][c] -= h;
            let ep = path_energy_of(cert, x_from, &plus).unwrap().0;
            let em = path_energy_of(cert, x_from, &minus).unwrap().0;
            grad[i][c] = (ep - em) / (2.0 * h);
        }
    }
    grad
}

/// `|g - g_fd| / |g_fd|` over the flattened gradient.
pub fn gradient_relative_error(cert: &DccmCertificate, x_from: &[f64], deltas: &[Vec<f64>]) -> f64 {
    let (_, g) = energy_gradient(cert, x_from, deltas).unwrap();
    let fd = fd_energy_gradient(cert, x_from, deltas, 1e-6);
    let diff: f64 = g.iter().flatten().zip(fd.iter().flatten()).map(|(a, b)| (a - b).powi(2)).sum();
    let norm: f64 = fd.iter().flatten().map(|b| b * b).sum();
    (diff / norm).sqrt()
}

#[derive(PartialEq)]
struct Node(f64, usize);

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Shortest Riemannian length between two planar points over piecewise
/// linear paths on a lattice of spacing `h`, found by Dijkstra. Edges join
/// every node to all lattice neighbors within `reach` steps along primitive
/// directions; edge length is Simpson's rule on `sqrt(d^T M d)`.
/// The lattice is anchored at `a`, so `b - a` must be a multiple of `h`.
pub fn lattice_geodesic_length(cert: &DccmCertificate, a: [f64; 2], b: [f64; 2], h: f64, pad: f64, reach: i64) -> f64 {
    let lo = [a[0].min(b[0]) - pad, a[1].min(b[1]) - pad];
    let hi = [a[0].max(b[0]) + pad, a[1].max(b[1]) + pad];
    let i_lo = [((lo[0] - a[0]) / h).floor() as i64, ((lo[1] - a[1]) / h).floor() as i64];
    let i_hi = [((hi[0] - a[0]) / h).ceil() as i64, ((hi[1] - a[1]) / h).ceil() as i64];
    let nx = (i_hi[0] - i_lo[0] + 1) as usize;
    let ny = (i_hi[1] - i_lo[1] + 1) as usize;
    let coord = |ix: i64, iy: i64| [a[0] + ix as f64 * h, a[1] + iy as f64 * h];
    let id = |ix: i64, iy: i64| ((ix - i_lo[0]) as usize) * ny + (iy - i_lo[1]) as usize;
    let metric = |p: [f64; 2]| cert.w_at(&p).try_inverse().expect("invertible W");
    let node_m: Vec<DMatrix<f64>> = (0..nx * ny)
        .map(|k| metric(coord(i_lo[0] + (k / ny) as i64, i_lo[1] + (k % ny) as i64)))
        .collect();
    let speed = |m: &DMatrix<f64>, d: [f64; 2]| {
        (m[(0, 0)] * d[0] * d[0] + 2.0 * m[(0, 1)] * d[0] * d[1] + m[(1, 1)] * d[1] * d[1]).sqrt()
    };
    let mut dirs = Vec::new();
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            if (dx, dy) != (0, 0) && gcd(dx, dy) == 1 {
                dirs.push((dx, dy));
            }
        }
    }
    let target_ix = ((b[0] - a[0]) / h).round() as i64;
    let target_iy = ((b[1] - a[1]) / h).round() as i64;
    let target = id(target_ix, target_iy);
    let mut dist = vec![f64::INFINITY; nx * ny];
    let start = id(0, 0);
    dist[start] = 0.0;
    let mut heap = BinaryHeap::from([Node(0.0, start)]);
    while let Some(Node(d, k)) = heap.pop() {
        if k == target {
            return d;
        }
        if d > dist[k] {
            continue;
        }
        let (ix, iy) = (i_lo[0] + (k / ny) as i64, i_lo[1] + (k % ny) as i64);
        let p = coord(ix, iy);
        for &(dx, dy) in &dirs {
            let (jx, jy) = (ix + dx, iy + dy);
            if jx < i_lo[0] || jx > i_hi[0] || jy < i_lo[1] || jy > i_hi[1] {
                continue;
            }
            let j = id(jx, jy);
            let step = [dx as f64 * h, dy as f64 * h];
            let mid = metric([p[0] + 0.5 * step[0], p[1] + 0.5 * step[1]]);
            let len = (speed(&node_m[k], step) + 4.0 * speed(&mid, step) + speed(&node_m[j], step)) / 6.0;
            let nd = d + len;
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Node(nd, j));
            }
        }
    }
    dist[target]
}

/// Small SDPs with known optima: `(name, problem, optimal objective)`.
pub fn micro_sdps() -> Vec<(&'static str, SdpProblem, f64)> {
    let mat = |r: usize, v: &[f64]| DMatrix::from_row_slice(r, r, v);
    let mut out = Vec::new();

    // lambda_max of [[2, 1], [1, 2]] is 3.
    let mut p = SdpProblem::new(1);
    p.objective[0] = 1.0;
    p.blocks
        .push(LmiBlock::from_dense(&mat(2, &[-2.0, -1.0, -1.0, -2.0]), &[DMatrix::identity(2, 2)]).unwrap());
    out.push(("largest eigenvalue", p, 3.0));

    // max y s.t. [[1, y], [y, 1]] >= 0  ->  y = 1.
    let mut p = SdpProblem::new(1);
    p.objective[0] = -1.0;
    p.blocks
        .push(LmiBlock::from_dense(&DMatrix::identity(2, 2), &[mat(2, &[0.0, 1.0, 1.0, 0.0])]).unwrap());
    out.push(("correlation bound", p, -1.0));

    // min y1 + y2 s.t. [[y1, 1], [1, y2]] >= 0  ->  2 at y1 = y2 = 1.
    let mut p = SdpProblem::new(2);
    p.objective = vec![1.0, 1.0];
    p.blocks.push(
        LmiBlock::from_dense(
            &mat(2, &[0.0, 1.0, 1.0, 0.0]),
            &[mat(2, &[1.0, 0.0, 0.0, 0.0]), mat(2, &[0.0, 0.0, 0.0, 1.0])],
        )
        .unwrap(),
    );
    out.push(("hyperbolic pair", p, 2.0));

    // Same with y1 - y2 = 1: y1 + y2 = sqrt(5).
    let mut q = out[2].1.clone();
    q.equalities.push(LinearEquality {
        coeffs: vec![(0, 1.0), (1, -1.0)],
        rhs: 1.0,
    });
    out.push(("hyperbolic pair with equality", q, 5f64.sqrt()));

    // Lyapunov: min t s.t. P - I >= 0, t I - P >= 0, and the scalar
    // a^2 P - P + 1 <= 0 for a = 0.5 gives P >= 4/3, so t = 4/3.
    let mut p = SdpProblem::new(2);
    p.objective = vec![0.0, 1.0];
    p.blocks.push(LmiBlock::from_dense(&mat(1, &[-1.0]), &[mat(1, &[1.0]), mat(1, &[0.0])]).unwrap());
    p.blocks.push(LmiBlock::from_dense(&mat(1, &[0.0]), &[mat(1, &[-1.0]), mat(1, &[1.0])]).unwrap());
    p.blocks.push(LmiBlock::from_dense(&mat(1, &[-1.0]), &[mat(1, &[0.75]), mat(1, &[0.0])]).unwrap());
    out.push(("scalar Lyapunov bound", p, 4.0 / 3.0));

    // min y1 + y2 s.t. [[y1, 1], [1, y2]] >= 0 and y2 >= 1: the bound is active, optimum 2.
    let mut p = SdpProblem::new(2);
    p.objective = vec![1.0, 1.0];
    p.blocks.push(
        LmiBlock::from_dense(
            &mat(2, &[0.0, 1.0, 1.0, 0.0]),
            &[mat(2, &[1.0, 0.0, 0.0, 0.0]), mat(2, &[0.0, 0.0, 0.0, 1.0])],
        )
        .unwrap(),
    );
    p.blocks.push(LmiBlock::from_dense(&mat(1, &[-1.0]), &[mat(1, &[0.0]), mat(1, &[1.0])]).unwrap());
    out.push(("sum with active bound", p, 2.0));

    // max t s.t. A - t I >= 0 for the tridiagonal (1, 2, 1) matrix, whose
    // eigenvalues are 2 - sqrt(2), 2 and 2 + sqrt(2).
    let a = mat(3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
    let lmin = 2.0 - 2f64.sqrt();
    let mut p = SdpProblem::new(1);
    p.objective[0] = -1.0;
    p.blocks.push(LmiBlock::from_dense(&a, &[-DMatrix::identity(3, 3)]).unwrap());
    out.push(("smallest eigenvalue 3x3", p, -lmin));

    out
}

/// `[[t, 2], [2, t]] >= 0` together with `t <= 1`.
pub fn infeasible_sdp() -> SdpProblem {
    let mat = |r: usize, v: &[f64]| DMatrix::from_row_slice(r, r, v);
    let mut p = SdpProblem::new(1);
    p.objective[0] = 1.0;
    p.blocks
        .push(LmiBlock::from_dense(&mat(2, &[0.0, 2.0, 2.0, 0.0]), &[DMatrix::identity(2, 2)]).unwrap());
    p.blocks.push(LmiBlock::from_dense(&mat(1, &[1.0]), &[mat(1, &[-1.0])]).unwrap());
    p
}
