//! Shared test utilities: an independent dense linear-algebra oracle
//! (cyclic Jacobi eigensolver, naive matrix products) and seeded random
//! graph generators. Nothing here touches nalgebra, so agreement with the
//! library is evidence rather than tautology.

#![allow(dead_code)]

use graphpse::graph::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(n: usize, m: usize) -> Mat {
    vec![vec![0.0; m]; n]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for i in 0..n {
        m[i][i] = 1.0;
    }
    m
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let m = if k > 0 { b[0].len() } else { 0 };
    let mut out = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            if x == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues ascending with matching eigenvector columns
/// (`vectors[row][col]`).
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut m: Mat = a.clone();
    let mut v = identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let mut vectors = zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row][col] = v[row][i];
        }
    }
    (values, vectors)
}

pub fn oracle_adjacency(g: &Graph) -> Mat {
    let mut a = zeros(g.num_nodes, g.num_nodes);
    for &(u, v) in &g.edges {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    a
}

pub fn oracle_degrees(g: &Graph) -> Vec<f64> {
    let mut d = vec![0.0; g.num_nodes];
    for &(u, v) in &g.edges {
        d[u] += 1.0;
        d[v] += 1.0;
    }
    d
}

pub fn oracle_combinatorial_laplacian(g: &Graph) -> Mat {
    let n = g.num_nodes;
    let a = oracle_adjacency(g);
    let d = oracle_degrees(g);
    let mut l = zeros(n, n);
    for i in 0..n {
        l[i][i] = d[i];
        for j in 0..n {
            l[i][j] -= a[i][j];
        }
    }
    l
}

/// Symmetric-normalized Laplacian, isolated-node rows/columns all zero.
pub fn oracle_sym_laplacian(g: &Graph) -> Mat {
    let n = g.num_nodes;
    let a = oracle_adjacency(g);
    let d = oracle_degrees(g);
    let mut l = zeros(n, n);
    for i in 0..n {
        if d[i] > 0.0 {
            l[i][i] = 1.0;
        }
        for j in 0..n {
            if a[i][j] != 0.0 {
                l[i][j] -= 1.0 / (d[i] * d[j]).sqrt();
            }
        }
    }
    l
}

pub fn oracle_zero_cutoff(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0_f64, f64::max);
    1e-8 * max.max(1.0)
}

/// (|eigvec| PE rows, broadcast eigenvalue rows), mirroring the LapPE
/// contract: skip near-zero eigenvalues, ascending order, zero-padded.
pub fn oracle_lap_pe(g: &Graph, k: usize) -> (Mat, Mat) {
    let n = g.num_nodes;
    let mut pe = zeros(n, k);
    let mut vals_row = vec![0.0; k];
    if n >= 2 {
        let (values, vectors) = jacobi_eigen(&oracle_sym_laplacian(g));
        let cutoff = oracle_zero_cutoff(&values);
        let mut col = 0;
        for (i, &lambda) in values.iter().enumerate() {
            if lambda.abs() <= cutoff {
                continue;
            }
            if col >= k {
                break;
            }
            vals_row[col] = lambda;
            for v in 0..n {
                pe[v][col] = vectors[v][i].abs();
            }
            col += 1;
        }
    }
    (pe, vec![vals_row; n])
}

pub fn oracle_pseudoinverse(m: &Mat) -> Mat {
    let n = m.len();
    let (values, vectors) = jacobi_eigen(m);
    let cutoff = oracle_zero_cutoff(&values);
    let mut out = zeros(n, n);
    for i in 0..n {
        if values[i].abs() > cutoff {
            for r in 0..n {
                for c in 0..n {
                    out[r][c] += vectors[r][i] * vectors[c][i] / values[i];
                }
            }
        }
    }
    out
}

fn components(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.num_nodes;
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &g.edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut stack = vec![s];
        seen[s] = true;
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Electrostatic statistics per node: min, max, mean, population std,
/// mean |.|, value at the component's highest-degree node (ties to lowest
/// index), sum — of the self-shifted pseudoinverse column.
pub fn oracle_elstatic(g: &Graph) -> Mat {
    let n = g.num_nodes;
    let deg = oracle_degrees(g);
    let mut out = zeros(n, 7);
    for comp in components(g) {
        let m = comp.len();
        if m < 2 {
            continue;
        }
        let local: std::collections::HashMap<usize, usize> =
            comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut lap = zeros(m, m);
        for &(u, v) in &g.edges {
            if let (Some(&lu), Some(&lv)) = (local.get(&u), local.get(&v)) {
                lap[lu][lv] -= 1.0;
                lap[lv][lu] -= 1.0;
                lap[lu][lu] += 1.0;
                lap[lv][lv] += 1.0;
            }
        }
        let pinv = oracle_pseudoinverse(&lap);
        let mut anchor = comp[0];
        for &v in &comp {
            if deg[v] > deg[anchor] {
                anchor = v;
            }
        }
        let anchor_local = local[&anchor];
        for (lv, &v) in comp.iter().enumerate() {
            let col: Vec<f64> = (0..m).map(|lu| pinv[lu][lv] - pinv[lv][lv]).collect();
            let sum: f64 = col.iter().sum();
            let mean = sum / m as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
            out[v] = vec![
                col.iter().cloned().fold(f64::INFINITY, f64::min),
                col.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                mean,
                var.sqrt(),
                col.iter().map(|x| x.abs()).sum::<f64>() / m as f64,
                col[anchor_local],
                sum,
            ];
        }
    }
    out
}

/// Random-walk return probabilities via naive repeated matrix products.
pub fn oracle_rwse(g: &Graph, steps: usize) -> Mat {
    let n = g.num_nodes;
    let a = oracle_adjacency(g);
    let d = oracle_degrees(g);
    let mut p = a;
    for u in 0..n {
        if d[u] > 0.0 {
            for v in 0..n {
                p[u][v] /= d[u];
            }
        }
    }
    let mut out = zeros(n, steps);
    let mut power = p.clone();
    for k in 0..steps {
        if k > 0 {
            power = matmul(&power, &p);
        }
        for v in 0..n {
            out[v][k] = power[v][v];
        }
    }
    out
}

/// Heat-kernel diagonal via the Jacobi eigendecomposition.
pub fn oracle_hk_diag(g: &Graph, times: &[f64]) -> Mat {
    let n = g.num_nodes;
    let (values, vectors) = jacobi_eigen(&oracle_sym_laplacian(g));
    let mut out = zeros(n, times.len());
    for v in 0..n {
        for (ti, &t) in times.iter().enumerate() {
            out[v][ti] = (0..n)
                .map(|i| (-t * values[i]).exp() * vectors[v][i] * vectors[v][i])
                .sum();
        }
    }
    out
}

/// Erdős–Rényi graph with `channels` categorical channels.
pub fn random_graph(rng: &mut ChaCha20Rng, id: &str, n: usize, p: f64, channels: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let mut g = Graph::new(id, n, edges);
    if channels > 0 {
        g.node_categories = (0..n)
            .map(|_| (0..channels).map(|_| rng.gen_range(0..4u32)).collect())
            .collect();
    }
    g
}

pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
