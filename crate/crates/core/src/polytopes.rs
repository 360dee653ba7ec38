//! Concept classes `C ⊆ {0,1}^K` and their convex hulls `U`.
//!
//! Each class supports hull membership, projection in binary relative
//! entropy, decomposition of a hull point into concepts, and vertex
//! enumeration for small instances.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interior clamp applied to incoming vectors before projection.
pub const INTERIOR_CLAMP: f64 = 1e-12;
pub const DEFAULT_VERTEX_CAP: usize = 100_000;
/// Hull residual accepted by [`decompose`].
pub const HULL_TOLERANCE: f64 = 1e-8;
/// Residual at which [`project`] declares failure.
pub const PROJECTION_TOLERANCE: f64 = 1e-9;
const MAX_SWEEPS: usize = 10_000;
const SWEEP_TARGET: f64 = 1e-12;

pub type Vertex = Vec<u8>;

fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the sigmoid at `x`.
fn sigmoid_slope(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

pub fn clamp_interior(u: &[f64]) -> Vec<f64> {
    u.iter()
        .map(|x| x.clamp(INTERIOR_CLAMP, 1.0 - INTERIOR_CLAMP))
        .collect()
}

/// Root of an increasing scalar function given as `(value, slope)`.
/// Newton steps, falling back to bisection whenever Newton leaves the bracket.
fn increasing_root<F: FnMut(f64) -> (f64, f64)>(mut g: F) -> f64 {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while g(lo).0 > 0.0 && lo > -1e4 {
        lo *= 2.0;
    }
    while g(hi).0 < 0.0 && hi < 1e4 {
        hi *= 2.0;
    }
    let mut x = 0.0f64.clamp(lo, hi);
    for _ in 0..300 {
        let (v, d) = g(x);
        if v.abs() <= 1e-15 {
            return x;
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x || hi - lo <= f64::EPSILON * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// One edge of a DAG description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DagEdge {
    pub source: String,
    pub target: String,
    /// Coordinate of this edge, `1..=K`.
    pub index: usize,
}

/// JSON form of a DAG whose source-to-sink paths form a concept class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DagSpec {
    pub nodes: Vec<String>,
    pub edges: Vec<DagEdge>,
    pub source: String,
    pub sink: String,
}

/// Validated DAG. Edge `e` is coordinate `e` of `[0,1]^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    names: Vec<String>,
    /// `(tail, head)` per coordinate.
    edges: Vec<(usize, usize)>,
    source: usize,
    sink: usize,
    /// Nodes in topological order.
    order: Vec<usize>,
    /// Per edge: `Some(0)` / `Some(1)` if every path avoids / uses it.
    fixed: Vec<Option<u8>>,
}

impl Dag {
    pub fn from_spec(spec: &DagSpec) -> Result<Self> {
        let mut ids = HashMap::new();
        for (i, name) in spec.nodes.iter().enumerate() {
            if ids.insert(name.as_str(), i).is_some() {
                return Err(Error::InvalidDag(format!("duplicate node {name:?}")));
            }
        }
        let lookup = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| Error::InvalidDag(format!("unknown node {name:?}")))
        };
        let k = spec.edges.len();
        let mut edges = vec![None; k];
        for e in &spec.edges {
            if e.index == 0 || e.index > k {
                return Err(Error::InvalidDag(format!(
                    "edge index {} outside 1..={k}",
                    e.index
                )));
            }
            let slot = &mut edges[e.index - 1];
            if slot.is_some() {
                return Err(Error::InvalidDag(format!("edge index {} repeated", e.index)));
            }
            *slot = Some((lookup(&e.source)?, lookup(&e.target)?));
        }
        let edges: Vec<_> = edges.into_iter().map(|e| e.expect("indices are a permutation")).collect();
        Self::new(spec.nodes.clone(), edges, lookup(&spec.source)?, lookup(&spec.sink)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?)
    }

    /// DAG on nodes `0..n` named by their numbers; edge `i` is coordinate `i`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], source: usize, sink: usize) -> Result<Self> {
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= n || *b >= n) {
            return Err(Error::InvalidDag(format!("edge ({a}, {b}) leaves 0..{n}")));
        }
        if source >= n || sink >= n {
            return Err(Error::InvalidDag("source or sink out of range".into()));
        }
        Self::new((0..n).map(|i| i.to_string()).collect(), edges.to_vec(), source, sink)
    }

    /// `s → a → t`, `s → b → t`.
    pub fn diamond() -> Self {
        Self::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)], 0, 3).expect("valid DAG")
    }

    fn new(names: Vec<String>, edges: Vec<(usize, usize)>, source: usize, sink: usize) -> Result<Self> {
        let n = names.len();
        if source == sink {
            return Err(Error::InvalidDag("source and sink coincide".into()));
        }
        if edges.is_empty() {
            return Err(Error::InvalidDag("no edges".into()));
        }
        if edges.iter().any(|(a, b)| a == b) {
            return Err(Error::InvalidDag("self loop".into()));
        }
        // Kahn's algorithm, smallest index first for a stable order.
        let mut indegree = vec![0usize; n];
        for &(_, b) in &edges {
            indegree[b] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &(a, b) in &edges {
                if a == v {
                    indegree[b] -= 1;
                    if indegree[b] == 0 {
                        ready.insert(b);
                    }
                }
            }
        }
        if order.len() != n {
            return Err(Error::InvalidDag("graph has a cycle".into()));
        }
        let mut dag = Self {
            names,
            edges,
            source,
            sink,
            order,
            fixed: Vec::new(),
        };
        let all = vec![true; dag.edges.len()];
        if !dag.connects(&all) {
            return Err(Error::InvalidDag("no path from source to sink".into()));
        }
        let fwd = dag.reach(&all, true);
        let bwd = dag.reach(&all, false);
        dag.fixed = (0..dag.edges.len())
            .map(|e| {
                let (a, b) = dag.edges[e];
                if !(fwd[a] && bwd[b]) {
                    return Some(0);
                }
                let mut without = all.clone();
                without[e] = false;
                if dag.connects(&without) {
                    None
                } else {
                    Some(1)
                }
            })
            .collect();
        Ok(dag)
    }

    /// Nodes reachable from the source (`forward`) or reaching the sink.
    fn reach(&self, enabled: &[bool], forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.names.len()];
        let mut stack = vec![if forward { self.source } else { self.sink }];
        seen[stack[0]] = true;
        while let Some(v) = stack.pop() {
            for (e, &(a, b)) in self.edges.iter().enumerate() {
                let (from, to) = if forward { (a, b) } else { (b, a) };
                if enabled[e] && from == v && !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen
    }

    fn connects(&self, enabled: &[bool]) -> bool {
        self.reach(enabled, true)[self.sink]
    }

    pub fn k(&self) -> usize {
        self.edges.len()
    }
    pub fn node_names(&self) -> &[String] {
        &self.names
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    pub fn source(&self) -> usize {
        self.source
    }
    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn to_spec(&self) -> DagSpec {
        DagSpec {
            nodes: self.names.clone(),
            edges: self
                .edges
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| DagEdge {
                    source: self.names[a].clone(),
                    target: self.names[b].clone(),
                    index: i + 1,
                })
                .collect(),
            source: self.names[self.source].clone(),
            sink: self.names[self.sink].clone(),
        }
    }

    /// Net outflow required at `node`.
    fn supply(&self, node: usize) -> f64 {
        if node == self.source {
            1.0
        } else if node == self.sink {
            -1.0
        } else {
            0.0
        }
    }

    fn conservation_residual(&self, u: &[f64]) -> f64 {
        let mut net = vec![0.0; self.names.len()];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            net[a] += u[e];
            net[b] -= u[e];
        }
        (0..net.len())
            .map(|v| (net[v] - self.supply(v)).abs())
            .fold(0.0, f64::max)
    }
}

/// Linear constraint `coeffs · u (= | ≤) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub equality: bool,
}

impl LinearConstraint {
    pub fn violation(&self, u: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(u).map(|(a, x)| a * x).sum();
        if self.equality {
            (lhs - self.rhs).abs()
        } else {
            (lhs - self.rhs).max(0.0)
        }
    }
}

/// JSON form of a concept class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    KSubsets { k: usize, m: usize },
    DagPaths { dag: DagSpec },
    Explicit { vertices: Vec<Vertex> },
}

/// A family of binary concepts with an efficient description of its hull.
#[derive(Debug, Clone, PartialEq)]
pub enum ConceptClass {
    /// All `m`-subsets of `K` items.
    KSubsets { k: usize, m: usize },
    /// Source-to-sink paths; coordinates are edges.
    DagPaths(Dag),
    /// An explicit, duplicate-free vertex list.
    Explicit { k: usize, vertices: Vec<Vertex> },
}

impl ConceptClass {
    pub fn k_subsets(k: usize, m: usize) -> Result<Self> {
        if k == 0 || m > k {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= m <= K and K >= 1, got K = {k}, m = {m}"
            )));
        }
        Ok(Self::KSubsets { k, m })
    }

    pub fn explicit(vertices: Vec<Vertex>) -> Result<Self> {
        let k = vertices.first().map(Vec::len).unwrap_or(0);
        if k == 0 {
            return Err(Error::InvalidArgument("explicit class needs vertices of length >= 1".into()));
        }
        if vertices.iter().any(|v| v.len() != k || v.iter().any(|&b| b > 1)) {
            return Err(Error::InvalidArgument(
                "explicit vertices must be 0/1 vectors of equal length".into(),
            ));
        }
        let unique: BTreeSet<Vertex> = vertices.into_iter().collect();
        Ok(Self::Explicit {
            k,
            vertices: unique.into_iter().collect(),
        })
    }

    pub fn from_spec(spec: &ClassSpec) -> Result<Self> {
        match spec {
            ClassSpec::KSubsets { k, m } => Self::k_subsets(*k, *m),
            ClassSpec::DagPaths { dag } => Ok(Self::DagPaths(Dag::from_spec(dag)?)),
            ClassSpec::Explicit { vertices } => Self::explicit(vertices.clone()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?)
    }

    pub fn to_spec(&self) -> ClassSpec {
        match self {
            Self::KSubsets { k, m } => ClassSpec::KSubsets { k: *k, m: *m },
            Self::DagPaths(dag) => ClassSpec::DagPaths { dag: dag.to_spec() },
            Self::Explicit { vertices, .. } => ClassSpec::Explicit {
                vertices: vertices.clone(),
            },
        }
    }

    /// Ambient dimension `K`.
    pub fn dim(&self) -> usize {
        match self {
            Self::KSubsets { k, .. } | Self::Explicit { k, .. } => *k,
            Self::DagPaths(dag) => dag.k(),
        }
    }

    /// Coordinates that take the same value on every concept.
    pub fn fixed_coordinates(&self) -> Vec<Option<u8>> {
        match self {
            Self::KSubsets { k, m } => {
                let value = if *m == 0 {
                    Some(0)
                } else if m == k {
                    Some(1)
                } else {
                    None
                };
                vec![value; *k]
            }
            Self::DagPaths(dag) => dag.fixed.clone(),
            Self::Explicit { k, vertices } => (0..*k)
                .map(|i| {
                    let first = vertices[0][i];
                    vertices.iter().all(|v| v[i] == first).then_some(first)
                })
                .collect(),
        }
    }

    /// Linear description of the hull: the box, plus the class equalities.
    /// For explicit classes only the box and the fixed coordinates are listed.
    pub fn hull_constraints(&self) -> Vec<LinearConstraint> {
        let k = self.dim();
        let unit = |i: usize, sign: f64| {
            let mut c = vec![0.0; k];
            c[i] = sign;
            c
        };
        let mut out = Vec::new();
        for i in 0..k {
            out.push(LinearConstraint { coeffs: unit(i, -1.0), rhs: 0.0, equality: false });
            out.push(LinearConstraint { coeffs: unit(i, 1.0), rhs: 1.0, equality: false });
        }
        match self {
            Self::KSubsets { m, .. } => out.push(LinearConstraint {
                coeffs: vec![1.0; k],
                rhs: *m as f64,
                equality: true,
            }),
            Self::DagPaths(dag) => {
                for node in 0..dag.names.len() {
                    if node == dag.sink {
                        continue;
                    }
                    let mut c = vec![0.0; k];
                    for (e, &(a, b)) in dag.edges.iter().enumerate() {
                        if a == node {
                            c[e] += 1.0;
                        }
                        if b == node {
                            c[e] -= 1.0;
                        }
                    }
                    out.push(LinearConstraint { coeffs: c, rhs: dag.supply(node), equality: true });
                }
                for (e, f) in dag.fixed.iter().enumerate() {
                    if *f == Some(0) {
                        out.push(LinearConstraint { coeffs: unit(e, 1.0), rhs: 0.0, equality: true });
                    }
                }
            }
            Self::Explicit { .. } => {
                for (i, f) in self.fixed_coordinates().iter().enumerate() {
                    if let Some(b) = f {
                        out.push(LinearConstraint { coeffs: unit(i, 1.0), rhs: *b as f64, equality: true });
                    }
                }
            }
        }
        out
    }

    /// Largest violation of hull membership. Zero exactly on `U`.
    pub fn hull_residual(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u.len())?;
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("hull point"));
        }
        let box_violation = u.iter().map(|&x| (-x).max(x - 1.0).max(0.0)).fold(0.0, f64::max);
        let class_violation = match self {
            Self::KSubsets { m, .. } => (u.iter().sum::<f64>() - *m as f64).abs(),
            Self::DagPaths(dag) => {
                let useless = dag
                    .fixed
                    .iter()
                    .zip(u)
                    .filter(|(f, _)| **f == Some(0))
                    .map(|(_, x)| x.abs())
                    .fold(0.0, f64::max);
                useless.max(dag.conservation_residual(u))
            }
            Self::Explicit { vertices, .. } => {
                let p = explicit_weights(vertices, u)?;
                let rebuilt = combine(vertices, &p);
                let mass = (p.iter().sum::<f64>() - 1.0).abs();
                rebuilt.iter().zip(u).map(|(a, b)| (a - b).abs()).fold(mass, f64::max)
            }
        };
        Ok(box_violation.max(class_violation))
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> Result<bool> {
        Ok(self.hull_residual(u)? <= tol)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), got })
        }
    }
}

fn combine(vertices: &[Vertex], p: &[f64]) -> Vec<f64> {
    let k = vertices[0].len();
    let mut u = vec![0.0; k];
    for (v, &w) in vertices.iter().zip(p) {
        for i in 0..k {
            u[i] += w * v[i] as f64;
        }
    }
    u
}

/// Convex combination of concepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub concepts: Vec<Vertex>,
    pub weights: Vec<f64>,
}

impl Decomposition {
    pub fn reconstruct(&self) -> Vec<f64> {
        if self.concepts.is_empty() {
            return Vec::new();
        }
        combine(&self.concepts, &self.weights)
    }
}

/// Projection of `u_tilde` onto `U` in binary relative entropy.
///
/// Coordinates of `u_tilde` are first clamped to `[1e-12, 1 − 1e-12]`.
/// Coordinates that are constant over the class are returned exactly.
pub fn project(class: &ConceptClass, u_tilde: &[f64]) -> Result<Vec<f64>> {
    class.check_dim(u_tilde.len())?;
    if u_tilde.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    let u = clamp_interior(u_tilde);
    let fixed = class.fixed_coordinates();
    let free: Vec<usize> = (0..u.len()).filter(|&i| fixed[i].is_none()).collect();
    let mut out: Vec<f64> = fixed.iter().map(|f| f.map_or(0.0, f64::from)).collect();
    if free.is_empty() {
        return Ok(out);
    }
    let z: Vec<f64> = u.iter().map(|&x| logit(x)).collect();
    match class {
        ConceptClass::KSubsets { m, .. } => {
            let m = *m as f64;
            let lambda = increasing_root(|l| {
                z.iter().fold((-m, 0.0), |(v, d), &zi| (v + sigmoid(zi + l), d + sigmoid_slope(zi + l)))
            });
            for i in free {
                out[i] = sigmoid(z[i] + lambda);
            }
        }
        ConceptClass::DagPaths(dag) => project_dag(dag, &z, &mut out)?,
        ConceptClass::Explicit { vertices, .. } => {
            if vertices.len() == 1usize << free.len().min(63) && free.len() == u.len() {
                return Ok(u);
            }
            project_explicit(vertices, &z, &free, &mut out)?;
        }
    }
    Ok(out)
}

/// Bregman projection onto the flow polytope through node potentials `λ`:
/// every free edge takes the form `σ(z_e + λ_tail − λ_head)`. Cyclic
/// per-node projections warm up `λ`, then damped Newton steps on the dual
/// finish, with the cyclic sweeps as a fallback.
fn project_dag(dag: &Dag, z: &[f64], out: &mut [f64]) -> Result<()> {
    let free = |e: usize| dag.fixed[e].is_none();
    // Per node: free out-edges, free in-edges, and the residual supply.
    let mut rows = Vec::new();
    for &node in &dag.order {
        if node == dag.sink {
            continue;
        }
        let mut outs = Vec::new();
        let mut ins = Vec::new();
        let mut supply = dag.supply(node);
        for (e, &(a, b)) in dag.edges.iter().enumerate() {
            if a == node {
                if free(e) {
                    outs.push(e);
                } else {
                    supply -= out[e];
                }
            }
            if b == node {
                if free(e) {
                    ins.push(e);
                } else {
                    supply += out[e];
                }
            }
        }
        if !outs.is_empty() || !ins.is_empty() {
            rows.push(Row { node, outs, ins, supply });
        }
    }
    let mut slot = vec![None; dag.names.len()];
    for (r, row) in rows.iter().enumerate() {
        slot[row.node] = Some(r);
    }
    let free_edges: Vec<usize> = (0..z.len()).filter(|&e| free(e)).collect();
    let shift_of = |lambda: &[f64], e: usize| {
        let (a, b) = dag.edges[e];
        z[e] + slot[a].map_or(0.0, |r| lambda[r]) - slot[b].map_or(0.0, |r| lambda[r])
    };
    let gradient = |lambda: &[f64]| -> Vec<f64> {
        rows.iter()
            .map(|row| {
                row.outs.iter().map(|&e| sigmoid(shift_of(lambda, e))).sum::<f64>()
                    - row.ins.iter().map(|&e| sigmoid(shift_of(lambda, e))).sum::<f64>()
                    - row.supply
            })
            .collect()
    };
    let dual = |lambda: &[f64]| -> f64 {
        free_edges.iter().map(|&e| softplus(shift_of(lambda, e))).sum::<f64>()
            - rows.iter().zip(lambda).map(|(row, l)| row.supply * l).sum::<f64>()
    };
    let inf_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut lambda = vec![0.0; rows.len()];
    let cyclic_sweep = |lambda: &mut [f64]| {
        for (r, row) in rows.iter().enumerate() {
            let base: Vec<f64> = row.outs.iter().chain(&row.ins).map(|&e| shift_of(lambda, e)).collect();
            let (bo, bi) = base.split_at(row.outs.len());
            let step = increasing_root(|l| {
                let mut v = -row.supply;
                let mut d = 0.0;
                for &x in bo {
                    v += sigmoid(x + l);
                    d += sigmoid_slope(x + l);
                }
                for &x in bi {
                    v -= sigmoid(x - l);
                    d += sigmoid_slope(x - l);
                }
                (v, d)
            });
            lambda[r] += step;
        }
    };

    const WARM_SWEEPS: usize = 50;
    const NEWTON_STEPS: usize = 200;
    let mut sweeps = 0;
    let mut res = inf_norm(&gradient(&lambda));
    while res > SWEEP_TARGET && sweeps < WARM_SWEEPS {
        cyclic_sweep(&mut lambda);
        sweeps += 1;
        res = inf_norm(&gradient(&lambda));
    }
    let n = rows.len();
    let mut newton = 0;
    while res > SWEEP_TARGET && newton < NEWTON_STEPS {
        newton += 1;
        let g = gradient(&lambda);
        let mut h = DMatrix::<f64>::zeros(n, n);
        for &e in &free_edges {
            let w = sigmoid_slope(shift_of(&lambda, e));
            let (a, b) = dag.edges[e];
            let (ra, rb) = (slot[a], slot[b]);
            if let Some(i) = ra {
                h[(i, i)] += w;
            }
            if let Some(j) = rb {
                h[(j, j)] += w;
            }
            if let (Some(i), Some(j)) = (ra, rb) {
                h[(i, j)] -= w;
                h[(j, i)] -= w;
            }
        }
        let ridge = 1e-14 * (1.0 + h.diagonal().max());
        for i in 0..n {
            h[(i, i)] += ridge;
        }
        let Some(chol) = h.cholesky() else { break };
        let dir = chol.solve(&DVector::from_column_slice(&g));
        let d0 = dual(&lambda);
        let slope: f64 = -dir.dot(&DVector::from_column_slice(&g));
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-12 {
            let trial: Vec<f64> = lambda.iter().zip(dir.iter()).map(|(l, d)| l - alpha * d).collect();
            let trial_res = inf_norm(&gradient(&trial));
            if dual(&trial) <= d0 + 1e-4 * alpha * slope || trial_res < res {
                lambda = trial;
                res = trial_res;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    while res > SWEEP_TARGET && sweeps < MAX_SWEEPS {
        cyclic_sweep(&mut lambda);
        sweeps += 1;
        res = inf_norm(&gradient(&lambda));
    }
    for &e in &free_edges {
        out[e] = sigmoid(shift_of(&lambda, e));
    }
    if res > PROJECTION_TOLERANCE {
        return Err(Error::ProjectionFailed { iterations: sweeps + newton, residual: res });
    }
    Ok(())
}

struct Row {
    node: usize,
    outs: Vec<usize>,
    ins: Vec<usize>,
    supply: f64,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Active-set projection onto the hull of a vertex list. The support is kept
/// affinely independent; each pass minimizes over its affine hull by Newton's
/// method, then either steps back into the hull (dropping a vertex) or, once
/// inside, adds the vertex with the best linearized decrease.
fn project_explicit(vertices: &[Vertex], z: &[f64], free: &[usize], out: &mut [f64]) -> Result<()> {
    let n = vertices.len();
    let centroid = combine(vertices, &vec![1.0 / n as f64; n]);
    let start = explicit_weights(vertices, &centroid)?;
    let mut active: Vec<usize> = (0..n).filter(|&j| start[j] > 0.0).collect();
    let mut p: Vec<f64> = active.iter().map(|&j| start[j]).collect();
    let normalize = |p: &mut Vec<f64>| {
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
    };
    normalize(&mut p);
    const MAX_PASSES: usize = 10_000;
    let mut gap = f64::INFINITY;
    for _ in 0..MAX_PASSES {
        let sub: Vec<Vertex> = active.iter().map(|&j| vertices[j].clone()).collect();
        let u = combine(&sub, &p);
        let target = newton_on_affine_hull(&sub, z, free, &u);
        let q = affine_coordinates(&sub, &target)?;
        if q.iter().all(|&x| x >= 0.0) {
            p = q;
            normalize(&mut p);
            let u = combine(&sub, &p);
            let (best, g, noise) = best_vertex(vertices, z, free, &u);
            gap = g;
            if !(gap > noise) || active.contains(&best) {
                for &i in free {
                    out[i] = u[i];
                }
                return Ok(());
            }
            // Move part of the mass onto the new vertex by exact line search,
            // which also pulls any coordinate stuck at 0 or 1 inside.
            let d: Vec<f64> = (0..u.len()).map(|i| vertices[best][i] as f64 - u[i]).collect();
            let step = line_search(&u, &d, z, free, 1.0);
            p.iter_mut().for_each(|x| *x *= 1.0 - step);
            active.push(best);
            p.push(step);
        } else {
            // Walk from p towards q until the first weight reaches zero.
            let mut alpha = 1.0f64;
            for (&pj, &qj) in p.iter().zip(&q) {
                if qj < 0.0 {
                    alpha = alpha.min(pj / (pj - qj));
                }
            }
            for (pj, &qj) in p.iter_mut().zip(&q) {
                *pj += alpha * (qj - *pj);
            }
            let lowest = (0..p.len()).min_by(|&a, &b| p[a].total_cmp(&p[b])).expect("nonempty");
            p[lowest] = 0.0;
            let keep: Vec<bool> = p.iter().map(|&x| x > 1e-15).collect();
            active = active.iter().zip(&keep).filter(|(_, &k)| k).map(|(&j, _)| j).collect();
            p = p.iter().zip(&keep).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
            normalize(&mut p);
        }
    }
    Err(Error::ProjectionFailed { iterations: MAX_PASSES, residual: gap })
}

fn kl_objective(u: &[f64], z: &[f64], coords: &[usize]) -> f64 {
    coords
        .iter()
        .map(|&i| {
            let x = u[i];
            x * x.ln() + (1.0 - x) * (-x).ln_1p() - x * z[i]
        })
        .sum()
}

/// Vertex minimizing the linearized objective at `u`, with the gap
/// `⟨∇f(u), u − c⟩` and the rounding noise of that gap. Coordinates where
/// `u` sits on `{0, 1}` contribute `±∞` when the vertex leaves them.
fn best_vertex(vertices: &[Vertex], z: &[f64], free: &[usize], u: &[f64]) -> (usize, f64, f64) {
    let gap_to = |v: &Vertex| {
        let mut gap = 0.0;
        let mut noise = 0.0;
        for &i in free {
            let diff = u[i] - v[i] as f64;
            if diff != 0.0 {
                let g = logit(u[i]) - z[i];
                gap += g * diff;
                // logit(u) carries an error of about ε / min(u, 1 − u).
                noise += diff.abs() * (g.abs() + z[i].abs() + 1.0 / u[i].min(1.0 - u[i]));
            }
        }
        (gap, 64.0 * f64::EPSILON * noise)
    };
    vertices
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let (gap, noise) = gap_to(v);
            (j, gap, noise)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty")
}

/// Minimizer of the objective on `u + step·d`, `step ∈ [0, max_step]`.
fn line_search(u: &[f64], d: &[f64], z: &[f64], free: &[usize], max_step: f64) -> f64 {
    let slope = |step: f64| {
        free.iter()
            .filter(|&&i| d[i] != 0.0)
            .map(|&i| {
                let x = (u[i] + step * d[i]).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                (logit(x) - z[i]) * d[i]
            })
            .sum::<f64>()
    };
    if slope(max_step) <= 0.0 {
        return max_step;
    }
    let (mut lo, mut hi) = (0.0, max_step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Newton's method for the objective on the affine hull of `sub`, from `u`
/// (a point of that hull, interior on every coordinate where `sub` varies).
fn newton_on_affine_hull(sub: &[Vertex], z: &[f64], free: &[usize], u: &[f64]) -> Vec<f64> {
    let varying: Vec<usize> = free
        .iter()
        .copied()
        .filter(|&i| sub.iter().any(|v| v[i] != sub[0][i]))
        .collect();
    let mut u = u.to_vec();
    if varying.is_empty() {
        return u;
    }
    let f = varying.len();
    let d = DMatrix::from_fn(f, sub.len() - 1, |r, c| {
        sub[c + 1][varying[r]] as f64 - sub[0][varying[r]] as f64
    });
    let svd = d.svd(true, false);
    let smax = svd.singular_values.max();
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&j| svd.singular_values[j] > 1e-10 * smax)
        .collect();
    let q = svd.u.expect("requested").select_columns(&cols);
    for _ in 0..100 {
        let g = DVector::from_iterator(f, varying.iter().map(|&i| logit(u[i]) - z[i]));
        let h = DVector::from_iterator(f, varying.iter().map(|&i| 1.0 / (u[i] * (1.0 - u[i]))));
        let reduced = q.transpose() * &g;
        let m = q.transpose() * DMatrix::from_diagonal(&h) * &q;
        let Some(chol) = m.cholesky() else { break };
        let step = chol.solve(&reduced);
        let decrement = reduced.dot(&step);
        if !(decrement > 1e-30) {
            break;
        }
        let dir = -(&q * step);
        let f0 = kl_objective(&u, z, &varying);
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-20 {
            let mut trial = u.clone();
            for (r, &i) in varying.iter().enumerate() {
                trial[i] += alpha * dir[r];
            }
            let inside = varying.iter().all(|&i| trial[i] > 0.0 && trial[i] < 1.0);
            if inside && kl_objective(&trial, z, &varying) <= f0 - 1e-4 * alpha * decrement {
                u = trial;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    u
}

/// Coefficients `q` with `Σ q = 1` and `Σ q_j c_j = u`, for affinely
/// independent `c_j`.
fn affine_coordinates(sub: &[Vertex], u: &[f64]) -> Result<Vec<f64>> {
    let k = u.len();
    let a = DMatrix::from_fn(k + 1, sub.len(), |r, c| if r < k { sub[c][r] as f64 } else { 1.0 });
    let b = DVector::from_iterator(k + 1, u.iter().copied().chain([1.0]));
    let q = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(q.iter().copied().collect())
}

/// Lawson–Hanson NNLS for `p ≥ 0` with `Σ p c = u` and `Σ p = 1`.
fn explicit_weights(vertices: &[Vertex], u: &[f64]) -> Result<Vec<f64>> {
    let k = u.len();
    let n = vertices.len();
    let a = DMatrix::from_fn(k + 1, n, |r, c| if r < k { vertices[c][r] as f64 } else { 1.0 });
    let b = DVector::from_iterator(k + 1, u.iter().copied().chain([1.0]));
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-14 * n as f64;
    for _ in 0..(3 * n + 10) {
        let w = a.transpose() * (&b - &a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(&cols);
            let sol = sub
                .svd(true, true)
                .solve(&b, 1e-13)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            if sol.iter().all(|&s| s > 0.0) {
                x.fill(0.0);
                for (&c, &s) in cols.iter().zip(sol.iter()) {
                    x[c] = s;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&c, &s) in cols.iter().zip(sol.iter()) {
                if s <= 0.0 {
                    alpha = alpha.min(x[c] / (x[c] - s));
                }
            }
            for (&c, &s) in cols.iter().zip(sol.iter()) {
                x[c] += alpha * (s - x[c]);
                if x[c] <= 1e-15 {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            if !passive.iter().any(|&q| q) {
                break;
            }
        }
    }
    Ok(x.iter().copied().collect())
}

/// Write `u ∈ U` as a convex combination of at most `2K` concepts.
pub fn decompose(class: &ConceptClass, u: &[f64]) -> Result<Decomposition> {
    let residual = class.hull_residual(u)?;
    if residual > HULL_TOLERANCE {
        return Err(Error::NotInHull { residual });
    }
    let k = class.dim();
    let mut concepts = Vec::new();
    let mut weights = Vec::new();
    match class {
        ConceptClass::KSubsets { m, .. } => {
            let mut r: Vec<f64> = u.iter().map(|x| x.clamp(0.0, 1.0)).collect();
            let mut mass = 1.0;
            while mass > 1e-14 && concepts.len() < 2 * k {
                let mut idx: Vec<usize> = (0..k).collect();
                idx.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
                let (chosen, rest) = idx.split_at(*m);
                let inside = chosen.iter().map(|&i| r[i]).fold(mass, f64::min);
                let outside = rest.iter().map(|&i| mass - r[i]).fold(mass, f64::min);
                let w = inside.min(outside).max(0.0);
                if w <= 0.0 {
                    break;
                }
                let mut c = vec![0u8; k];
                for &i in chosen {
                    c[i] = 1;
                    r[i] = (r[i] - w).max(0.0);
                }
                mass -= w;
                concepts.push(c);
                weights.push(w);
            }
        }
        ConceptClass::DagPaths(dag) => {
            let mut f: Vec<f64> = u.iter().map(|x| x.clamp(0.0, 1.0)).collect();
            let n = dag.names.len();
            while concepts.len() < 2 * k {
                // Widest path by dynamic programming in topological order.
                let mut width = vec![0.0f64; n];
                let mut via = vec![usize::MAX; n];
                width[dag.source] = f64::INFINITY;
                for &v in &dag.order {
                    if width[v] <= 0.0 {
                        continue;
                    }
                    for (e, &(a, b)) in dag.edges.iter().enumerate() {
                        if a == v && f[e] > 0.0 {
                            let w = width[v].min(f[e]);
                            if w > width[b] {
                                width[b] = w;
                                via[b] = e;
                            }
                        }
                    }
                }
                let w = width[dag.sink];
                if !(w > 1e-14) {
                    break;
                }
                let mut c = vec![0u8; k];
                let mut v = dag.sink;
                while v != dag.source {
                    let e = via[v];
                    c[e] = 1;
                    f[e] -= w;
                    if f[e] < 1e-15 {
                        f[e] = 0.0;
                    }
                    v = dag.edges[e].0;
                }
                concepts.push(c);
                weights.push(w);
            }
        }
        ConceptClass::Explicit { vertices, .. } => {
            for (v, p) in vertices.iter().zip(explicit_weights(vertices, u)?) {
                if p > 0.0 {
                    concepts.push(v.clone());
                    weights.push(p);
                }
            }
        }
    }
    let total: f64 = weights.iter().sum();
    if concepts.is_empty() || !(total > 0.0) {
        return Err(Error::NotInHull { residual });
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(Decomposition { concepts, weights })
}

/// All concepts, failing once more than `cap` are found.
pub fn enumerate_vertices(class: &ConceptClass, cap: usize) -> Result<Vec<Vertex>> {
    match class {
        ConceptClass::KSubsets { k, m } => {
            let mut count: u128 = 1;
            for i in 0..*m {
                count = count * (*k - i) as u128 / (i + 1) as u128;
                if count > cap as u128 * (*m as u128 + 1) {
                    break;
                }
            }
            if count > cap as u128 {
                return Err(Error::VertexCapExceeded { cap });
            }
            let mut out = Vec::with_capacity(count as usize);
            let mut pick: Vec<usize> = (0..*m).collect();
            loop {
                let mut v = vec![0u8; *k];
                for &i in &pick {
                    v[i] = 1;
                }
                out.push(v);
                // Next combination in lexicographic order of index sets.
                let Some(pos) = (0..*m).rev().find(|&i| pick[i] < k - m + i) else {
                    break;
                };
                pick[pos] += 1;
                for j in pos + 1..*m {
                    pick[j] = pick[j - 1] + 1;
                }
            }
            Ok(out)
        }
        ConceptClass::DagPaths(dag) => {
            let mut out = Vec::new();
            let mut current = vec![0u8; dag.k()];
            dag_paths(dag, dag.source, &mut current, &mut out, cap)?;
            Ok(out)
        }
        ConceptClass::Explicit { vertices, .. } => {
            if vertices.len() > cap {
                return Err(Error::VertexCapExceeded { cap });
            }
            Ok(vertices.clone())
        }
    }
}

fn dag_paths(dag: &Dag, v: usize, current: &mut Vertex, out: &mut Vec<Vertex>, cap: usize) -> Result<()> {
    if v == dag.sink {
        if out.len() == cap {
            return Err(Error::VertexCapExceeded { cap });
        }
        out.push(current.clone());
        return Ok(());
    }
    for (e, &(a, b)) in dag.edges.iter().enumerate() {
        if a == v && dag.fixed[e] != Some(0) {
            current[e] = 1;
            dag_paths(dag, b, current, out, cap)?;
            current[e] = 0;
        }
    }
    Ok(())
}

/// Componentwise Bayesian posterior `u e^{−x1} / (u e^{−x1} + (1 − u) e^{−x0})`.
pub fn unconstrained_update(u: &[f64], x1: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
    if x1.len() != u.len() || x0.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: if x1.len() != u.len() { x1.len() } else { x0.len() },
        });
    }
    u.iter()
        .zip(x1.iter().zip(x0))
        .map(|(&u, (&a, &b))| {
            if !(u > 0.0 && u < 1.0) {
                return Err(Error::InvalidArgument(format!("usage {u} is not interior")));
            }
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite("unconstrained update losses"));
            }
            let shift = a.min(b);
            let one = u * (shift - a).exp();
            let zero = (1.0 - u) * (shift - b).exp();
            if one + zero == 0.0 {
                return Err(Error::InvalidArgument("posterior normalizer underflowed".into()));
            }
            Ok(one / (one + zero))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_counts() {
        let c = ConceptClass::k_subsets(4, 2).unwrap();
        assert_eq!(enumerate_vertices(&c, DEFAULT_VERTEX_CAP).unwrap().len(), 6);
        let line = ConceptClass::DagPaths(Dag::from_edges(2, &[(0, 1)], 0, 1).unwrap());
        assert_eq!(enumerate_vertices(&line, DEFAULT_VERTEX_CAP).unwrap(), vec![vec![1]]);
        let diamond = ConceptClass::DagPaths(Dag::diamond());
        assert_eq!(enumerate_vertices(&diamond, DEFAULT_VERTEX_CAP).unwrap().len(), 2);
        let big = ConceptClass::k_subsets(40, 20).unwrap();
        assert!(matches!(
            enumerate_vertices(&big, DEFAULT_VERTEX_CAP),
            Err(Error::VertexCapExceeded { .. })
        ));
    }

    #[test]
    fn dag_validation() {
        assert!(Dag::from_edges(3, &[(0, 1), (1, 2), (2, 0)], 0, 2).is_err());
        assert!(Dag::from_edges(3, &[(0, 1)], 0, 2).is_err());
        assert!(Dag::from_edges(2, &[(0, 1)], 0, 0).is_err());
        let json = r#"{"nodes":["s","t"],"edges":[{"source":"s","target":"t","index":2}],"source":"s","sink":"t"}"#;
        assert!(Dag::from_json(json).is_err());
        let extra = r#"{"nodes":["s","t"],"edges":[],"source":"s","sink":"t","weight":1}"#;
        assert!(Dag::from_json(extra).is_err());
    }

    #[test]
    fn dag_json_edge_order_is_the_coordinate_order() {
        let json = r#"{"nodes":["s","a","t"],
            "edges":[{"source":"a","target":"t","index":1},{"source":"s","target":"a","index":2},
                     {"source":"s","target":"t","index":3}],
            "source":"s","sink":"t"}"#;
        let dag = Dag::from_json(json).unwrap();
        assert_eq!(dag.edges(), &[(1, 2), (0, 1), (0, 2)]);
        let class = ConceptClass::DagPaths(dag);
        let mut paths = enumerate_vertices(&class, 10).unwrap();
        paths.sort();
        assert_eq!(paths, vec![vec![0, 0, 1], vec![1, 1, 0]]);
    }

    #[test]
    fn k_subsets_symmetric_projection() {
        let c = ConceptClass::k_subsets(3, 1).unwrap();
        let p = project(&c, &[0.5, 0.5, 0.5]).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn two_dimensional_decomposition_is_unique() {
        let c = ConceptClass::k_subsets(2, 1).unwrap();
        let d = decompose(&c, &[0.3, 0.7]).unwrap();
        let mut pairs: Vec<_> = d.concepts.iter().cloned().zip(d.weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(pairs[0].0, vec![0, 1]);
        assert!((pairs[0].1 - 0.7).abs() < 1e-15);
        assert!((pairs[1].1 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn diamond_midpoint_splits_evenly() {
        let c = ConceptClass::DagPaths(Dag::diamond());
        let d = decompose(&c, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(d.concepts.len(), 2);
        assert!(d.weights.iter().all(|w| (w - 0.5).abs() < 1e-15));
    }

    #[test]
    fn vertex_decomposes_to_itself() {
        let c = ConceptClass::k_subsets(5, 2).unwrap();
        let d = decompose(&c, &[0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(d.concepts, vec![vec![0, 1, 0, 1, 0]]);
        assert_eq!(d.weights, vec![1.0]);
    }

    #[test]
    fn off_hull_points_are_rejected() {
        let c = ConceptClass::k_subsets(3, 1).unwrap();
        assert!(matches!(decompose(&c, &[0.5, 0.5, 0.5]), Err(Error::NotInHull { .. })));
    }

    #[test]
    fn full_cube_projection_is_identity() {
        let c = ConceptClass::explicit(vec![vec![0], vec![1]]).unwrap();
        assert_eq!(project(&c, &[0.25]).unwrap(), vec![0.25]);
    }

    #[test]
    fn explicit_matches_k_subsets() {
        let ks = ConceptClass::k_subsets(4, 2).unwrap();
        let ex = ConceptClass::explicit(enumerate_vertices(&ks, 100).unwrap()).unwrap();
        let u = [0.2, 0.9, 0.4, 0.6];
        let a = project(&ks, &u).unwrap();
        let b = project(&ex, &u).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{a:?} vs {b:?}");
        }
        let d = decompose(&ex, &a).unwrap();
        for (x, y) in d.reconstruct().iter().zip(&a) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn equal_losses_leave_usage_alone() {
        let u = [0.2, 0.7];
        assert_eq!(unconstrained_update(&u, &[0.3, -1.0], &[0.3, -1.0]).unwrap(), u.to_vec());
        let v = unconstrained_update(&[0.5], &[0.0], &[std::f64::consts::LN_2]).unwrap();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
    }
}
