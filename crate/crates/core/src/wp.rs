//! Warning propagation with three-valued messages, node classification,
//! peeling, slush contraction, flippers and the algebraic per-edge
//! message oracle.
//!
//! Messages live on directed edges of a Tanner graph and take values in
//! `{f, s, u}` (frozen / slush / unfrozen). Starting from all-`s`, one
//! round recomputes every check-to-variable message from the previous
//! variable-to-check messages and then every variable-to-check message
//! from the fresh check-to-variable ones. A message changes value at most
//! once (`s` hardens to `f` or `u` and never moves again), which bounds
//! the number of effective rounds by twice the edge count.

use std::fmt;

use serde::Serialize;

use crate::gf2::{frozen_set, BitMatrix, BitVec};
use crate::graph::TannerGraph;

/// A warning propagation message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Msg {
    F,
    S,
    U,
}

/// A two-valued standard (algebraic) message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StdMsg {
    F,
    U,
}

/// Node mark derived from standard messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mark {
    F,
    Star,
    U,
}

#[derive(Debug)]
pub enum WpError {
    Multigraph,
    NotFixedPoint,
    NotSlushGraph(String),
    NotInKernel,
    SizeGuard { limit: usize, actual: usize },
}

impl fmt::Display for WpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WpError::Multigraph => write!(f, "operation requires a simple Tanner graph"),
            WpError::NotFixedPoint => write!(f, "message state is not a fixed point"),
            WpError::NotSlushGraph(msg) => write!(f, "not a slush graph: {msg}"),
            WpError::NotInKernel => write!(f, "vector is not in the kernel of the slush minor"),
            WpError::SizeGuard { limit, actual } => {
                write!(f, "size guard exceeded: {actual} > {limit}")
            }
        }
    }
}

impl std::error::Error for WpError {}

/// Directed messages on every edge after running warning propagation.
#[derive(Clone, Debug)]
pub struct MessageState {
    /// Edge endpoints `(variable, check)`, sorted lexicographically.
    pub edges: Vec<(usize, usize)>,
    pub var_to_check: Vec<Msg>,
    pub check_to_var: Vec<Msg>,
    /// Number of rounds that changed at least one message.
    pub rounds_run: usize,
    /// Messages changed in each such round.
    pub changes_per_round: Vec<usize>,
}

struct EdgeIndex {
    edges: Vec<(usize, usize)>,
    var_edges: Vec<Vec<usize>>,
    check_edges: Vec<Vec<usize>>,
}

fn build_edge_index(g: &TannerGraph) -> Result<EdgeIndex, WpError> {
    if !g.is_simple() {
        return Err(WpError::Multigraph);
    }
    let mut edges = Vec::with_capacity(g.n_edges());
    let mut var_edges = vec![Vec::new(); g.n_vars()];
    let mut check_edges = vec![Vec::new(); g.n_checks()];
    for v in 0..g.n_vars() {
        for &(c, _) in g.var_adj(v) {
            let e = edges.len();
            edges.push((v, c));
            var_edges[v].push(e);
            check_edges[c].push(e);
        }
    }
    Ok(EdgeIndex {
        edges,
        var_edges,
        check_edges,
    })
}

/// Runs warning propagation from the all-`s` start to its fixed point.
pub fn wp_run(g: &TannerGraph) -> Result<MessageState, WpError> {
    let ix = build_edge_index(g)?;
    let ne = ix.edges.len();
    let mut v2c = vec![Msg::S; ne];
    let mut c2v = vec![Msg::S; ne];
    let mut changes_per_round = Vec::new();
    loop {
        let mut changed = 0usize;
        // checks first, from the previous variable messages
        for c in 0..g.n_checks() {
            let mut nf = 0usize;
            let mut nu = 0usize;
            for &e in &ix.check_edges[c] {
                match v2c[e] {
                    Msg::F => nf += 1,
                    Msg::U => nu += 1,
                    Msg::S => {}
                }
            }
            let deg = ix.check_edges[c].len();
            for &e in &ix.check_edges[c] {
                let (of, ou) = match v2c[e] {
                    Msg::F => (nf - 1, nu),
                    Msg::U => (nf, nu - 1),
                    Msg::S => (nf, nu),
                };
                let new = if of == deg - 1 {
                    Msg::F // every other variable reports frozen
                } else if ou > 0 {
                    Msg::U
                } else {
                    Msg::S
                };
                if new != c2v[e] {
                    assert_eq!(c2v[e], Msg::S, "message hardened twice");
                    c2v[e] = new;
                    changed += 1;
                }
            }
        }
        // then variables, from the fresh check messages
        for v in 0..g.n_vars() {
            let mut nf = 0usize;
            let mut nu = 0usize;
            for &e in &ix.var_edges[v] {
                match c2v[e] {
                    Msg::F => nf += 1,
                    Msg::U => nu += 1,
                    Msg::S => {}
                }
            }
            let deg = ix.var_edges[v].len();
            for &e in &ix.var_edges[v] {
                let (of, ou) = match c2v[e] {
                    Msg::F => (nf - 1, nu),
                    Msg::U => (nf, nu - 1),
                    Msg::S => (nf, nu),
                };
                let new = if ou == deg - 1 {
                    Msg::U // every other check reports unfrozen
                } else if of > 0 {
                    Msg::F
                } else {
                    Msg::S
                };
                if new != v2c[e] {
                    assert_eq!(v2c[e], Msg::S, "message hardened twice");
                    v2c[e] = new;
                    changed += 1;
                }
            }
        }
        if changed == 0 {
            break;
        }
        changes_per_round.push(changed);
    }
    Ok(MessageState {
        edges: ix.edges,
        var_to_check: v2c,
        check_to_var: c2v,
        rounds_run: changes_per_round.len(),
        changes_per_round,
    })
}

/// Classification of all nodes at a warning propagation fixed point.
#[derive(Clone, Debug, Serialize)]
pub struct SlushDecomposition {
    #[serde(rename = "V_f")]
    pub v_f: Vec<usize>,
    #[serde(rename = "V_u")]
    pub v_u: Vec<usize>,
    #[serde(rename = "V_s")]
    pub v_s: Vec<usize>,
    #[serde(rename = "V_other")]
    pub v_other: Vec<usize>,
    #[serde(rename = "C_f")]
    pub c_f: Vec<usize>,
    #[serde(rename = "C_u")]
    pub c_u: Vec<usize>,
    #[serde(rename = "C_s")]
    pub c_s: Vec<usize>,
    #[serde(rename = "C_other")]
    pub c_other: Vec<usize>,
    pub n_s: usize,
    pub m_s: usize,
}

/// The classification dump written by the command line tool.
#[derive(Clone, Debug, Serialize)]
pub struct ClassificationDump {
    #[serde(flatten)]
    pub decomposition: SlushDecomposition,
    pub rounds: usize,
}

/// Sorts nodes into the frozen / unfrozen / slush / residual buckets.
///
/// `ms` must be the fixed point for `g`: one extra sweep is run to verify
/// nothing moves.
pub fn classify(g: &TannerGraph, ms: &MessageState) -> Result<SlushDecomposition, WpError> {
    let check = wp_verify_fixed_point(g, ms)?;
    if !check {
        return Err(WpError::NotFixedPoint);
    }
    let ix = build_edge_index(g)?;
    let mut dec = SlushDecomposition {
        v_f: vec![],
        v_u: vec![],
        v_s: vec![],
        v_other: vec![],
        c_f: vec![],
        c_u: vec![],
        c_s: vec![],
        c_other: vec![],
        n_s: 0,
        m_s: 0,
    };
    for v in 0..g.n_vars() {
        let mut nf = 0;
        let mut ns = 0;
        let mut nu = 0;
        for &e in &ix.var_edges[v] {
            match ms.check_to_var[e] {
                Msg::F => nf += 1,
                Msg::S => ns += 1,
                Msg::U => nu += 1,
            }
        }
        let deg = ix.var_edges[v].len();
        if nf > 0 {
            dec.v_f.push(v);
        } else if nu == deg {
            dec.v_u.push(v); // vacuously true for isolated variables
        } else if ns >= 2 {
            dec.v_s.push(v);
        } else {
            dec.v_other.push(v);
        }
    }
    for c in 0..g.n_checks() {
        let mut nf = 0;
        let mut ns = 0;
        let mut nu = 0;
        for &e in &ix.check_edges[c] {
            match ms.var_to_check[e] {
                Msg::F => nf += 1,
                Msg::S => ns += 1,
                Msg::U => nu += 1,
            }
        }
        let deg = ix.check_edges[c].len();
        if nf == deg {
            dec.c_f.push(c); // vacuously true for isolated checks
        } else if nu > 0 {
            dec.c_u.push(c);
        } else if ns >= 2 {
            dec.c_s.push(c);
        } else {
            dec.c_other.push(c);
        }
    }
    dec.n_s = dec.v_s.len();
    dec.m_s = dec.c_s.len();
    Ok(dec)
}

fn wp_verify_fixed_point(g: &TannerGraph, ms: &MessageState) -> Result<bool, WpError> {
    let ix = build_edge_index(g)?;
    if ix.edges != ms.edges {
        return Err(WpError::NotFixedPoint);
    }
    for c in 0..g.n_checks() {
        let deg = ix.check_edges[c].len();
        let nf = ix.check_edges[c]
            .iter()
            .filter(|&&e| ms.var_to_check[e] == Msg::F)
            .count();
        let nu = ix.check_edges[c]
            .iter()
            .filter(|&&e| ms.var_to_check[e] == Msg::U)
            .count();
        for &e in &ix.check_edges[c] {
            let (of, ou) = match ms.var_to_check[e] {
                Msg::F => (nf - 1, nu),
                Msg::U => (nf, nu - 1),
                Msg::S => (nf, nu),
            };
            let new = if of == deg - 1 {
                Msg::F
            } else if ou > 0 {
                Msg::U
            } else {
                Msg::S
            };
            if new != ms.check_to_var[e] {
                return Ok(false);
            }
        }
    }
    for v in 0..g.n_vars() {
        let deg = ix.var_edges[v].len();
        let nf = ix.var_edges[v]
            .iter()
            .filter(|&&e| ms.check_to_var[e] == Msg::F)
            .count();
        let nu = ix.var_edges[v]
            .iter()
            .filter(|&&e| ms.check_to_var[e] == Msg::U)
            .count();
        for &e in &ix.var_edges[v] {
            let (of, ou) = match ms.check_to_var[e] {
                Msg::F => (nf - 1, nu),
                Msg::U => (nf, nu - 1),
                Msg::S => (nf, nu),
            };
            let new = if ou == deg - 1 {
                Msg::U
            } else if of > 0 {
                Msg::F
            } else {
                Msg::S
            };
            if new != ms.var_to_check[e] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Survivors of the degree-at-most-one peeling process.
///
/// Repeatedly removes any node of degree <= 1 together with its
/// neighbour, if any; the surviving variables and checks are returned
/// sorted. The survivor set does not depend on the removal order.
pub fn peel_slush(g: &TannerGraph) -> Result<(Vec<usize>, Vec<usize>), WpError> {
    if !g.is_simple() {
        return Err(WpError::Multigraph);
    }
    let nv = g.n_vars();
    let nc = g.n_checks();
    let mut deg_v: Vec<usize> = (0..nv).map(|v| g.var_degree(v)).collect();
    let mut deg_c: Vec<usize> = (0..nc).map(|c| g.check_degree(c)).collect();
    let mut alive_v = vec![true; nv];
    let mut alive_c = vec![true; nc];
    let mut queue: Vec<(usize, bool)> = Vec::new();
    for v in 0..nv {
        if deg_v[v] <= 1 {
            queue.push((v, true));
        }
    }
    for c in 0..nc {
        if deg_c[c] <= 1 {
            queue.push((c, false));
        }
    }
    while let Some((u, is_var)) = queue.pop() {
        let alive = if is_var { &mut alive_v } else { &mut alive_c };
        if !alive[u] {
            continue;
        }
        let deg = if is_var { deg_v[u] } else { deg_c[u] };
        if deg > 1 {
            continue; // stale entry
        }
        alive[u] = false;
        if deg == 0 {
            continue;
        }
        // kill the unique alive neighbour and update its other neighbours
        let partner = if is_var {
            g.var_adj(u).iter().map(|&(c, _)| c).find(|&c| alive_c[c])
        } else {
            g.check_adj(u).iter().map(|&(v, _)| v).find(|&v| alive_v[v])
        };
        let Some(w) = partner else { continue };
        if is_var {
            alive_c[w] = false;
            for &(y, _) in g.check_adj(w) {
                if alive_v[y] {
                    deg_v[y] -= 1;
                    if deg_v[y] <= 1 {
                        queue.push((y, true));
                    }
                }
            }
        } else {
            alive_v[w] = false;
            for &(b, _) in g.var_adj(w) {
                if alive_c[b] {
                    deg_c[b] -= 1;
                    if deg_c[b] <= 1 {
                        queue.push((b, false));
                    }
                }
            }
        }
    }
    let vs = (0..nv).filter(|&v| alive_v[v]).collect();
    let cs = (0..nc).filter(|&c| alive_c[c]).collect();
    Ok((vs, cs))
}

/// The minor of `a` on the slush rows and columns, in sorted index order.
pub fn slush_minor(a: &BitMatrix, dec: &SlushDecomposition) -> BitMatrix {
    a.submatrix(&dec.c_s, &dec.v_s)
}

/// Extends a kernel vector of the slush minor to a kernel vector of the
/// whole matrix.
///
/// Runs the peeling in two stages: first checks of degree <= 1 are
/// removed with their variable (those variables are forced to zero),
/// then variables of degree <= 1 are removed with their check. The
/// removed variables of the second stage are assigned in reverse removal
/// order so that each satisfies the check it was removed with.
pub fn extend_slush_solution(
    a: &BitMatrix,
    dec: &SlushDecomposition,
    xi_s: &BitVec,
) -> Result<BitVec, WpError> {
    assert_eq!(xi_s.len(), dec.v_s.len(), "slush vector has wrong length");
    let minor = slush_minor(a, dec);
    if !minor.mul_vec(xi_s).is_zero() {
        return Err(WpError::NotInKernel);
    }
    let g = TannerGraph::from_matrix(a);
    let nv = g.n_vars();
    let nc = g.n_checks();
    let mut deg_v: Vec<usize> = (0..nv).map(|v| g.var_degree(v)).collect();
    let mut deg_c: Vec<usize> = (0..nc).map(|c| g.check_degree(c)).collect();
    let mut alive_v = vec![true; nv];
    let mut alive_c = vec![true; nc];

    // stage 1: checks of degree <= 1 go, each with its variable if any
    let mut queue: Vec<usize> = (0..nc).filter(|&c| deg_c[c] <= 1).collect();
    let mut stage1_vars: Vec<usize> = Vec::new();
    while let Some(c) = queue.pop() {
        if !alive_c[c] || deg_c[c] > 1 {
            continue;
        }
        alive_c[c] = false;
        if deg_c[c] == 0 {
            continue;
        }
        let Some(v) = g.check_adj(c).iter().map(|&(v, _)| v).find(|&v| alive_v[v]) else {
            continue;
        };
        alive_v[v] = false;
        stage1_vars.push(v);
        for &(b, _) in g.var_adj(v) {
            if alive_c[b] {
                deg_c[b] -= 1;
                if deg_c[b] <= 1 {
                    queue.push(b);
                }
            }
        }
    }
    // degrees of variables must discount dead checks
    for v in 0..nv {
        if alive_v[v] {
            deg_v[v] = g.var_adj(v).iter().filter(|&&(c, _)| alive_c[c]).count();
        }
    }

    // stage 2: variables of degree <= 1 go, each with its check if any
    let mut queue: Vec<usize> = (0..nv).filter(|&v| alive_v[v] && deg_v[v] <= 1).collect();
    let mut stage2: Vec<(usize, Option<usize>)> = Vec::new();
    while let Some(v) = queue.pop() {
        if !alive_v[v] || deg_v[v] > 1 {
            continue;
        }
        alive_v[v] = false;
        if deg_v[v] == 0 {
            stage2.push((v, None));
            continue;
        }
        let Some(b) = g.var_adj(v).iter().map(|&(c, _)| c).find(|&c| alive_c[c]) else {
            stage2.push((v, None));
            continue;
        };
        stage2.push((v, Some(b)));
        alive_c[b] = false;
        for &(y, _) in g.check_adj(b) {
            if alive_v[y] {
                deg_v[y] -= 1;
                if deg_v[y] <= 1 {
                    queue.push(y);
                }
            }
        }
    }

    // survivors are exactly the slush
    let mut xi = BitVec::zeros(a.n_cols());
    for (i, &v) in dec.v_s.iter().enumerate() {
        debug_assert!(alive_v[v], "slush variable {v} was peeled");
        if xi_s.get(i) {
            xi.set(v, true);
        }
    }
    // stage-1 variables stay zero; stage-2 variables satisfy their check
    for &(v, b) in stage2.iter().rev() {
        let Some(b) = b else { continue };
        let mut parity = false;
        for &(y, _) in g.check_adj(b) {
            if y != v && xi.get(y) {
                parity = !parity;
            }
        }
        if parity {
            xi.set(v, true);
        }
    }
    debug_assert!(a.mul_vec(&xi).is_zero());
    Ok(xi)
}

/// Result of contracting the degree-two checks of a slush graph.
#[derive(Clone, Debug)]
pub struct ContractionMap {
    /// Contracted-variable id for each variable of the slush graph.
    pub component_of: Vec<usize>,
    /// Cycle rank of the subgraph on degree-two checks.
    pub cycle_rank: usize,
    /// Parity matrix of the contracted system (kept checks by components).
    pub contracted: BitMatrix,
    /// Original indices of the checks of degree >= 3, sorted.
    pub kept_checks: Vec<usize>,
}

/// Contracts every degree-two check of a slush graph.
///
/// Degree-two checks only equalise their two neighbours, so the variable
/// classes they generate can be merged; the remaining checks are
/// re-expressed over the merged variables with entries equal to the
/// parity of the edge multiplicities. The kernel is preserved exactly:
/// kernel vectors of the input correspond to component-constant
/// assignments.
pub fn contract_slush(gs: &TannerGraph) -> Result<ContractionMap, WpError> {
    let nv = gs.n_vars();
    let nc = gs.n_checks();
    for v in 0..nv {
        if gs.var_degree(v) < 2 {
            return Err(WpError::NotSlushGraph(format!(
                "variable {v} has degree < 2"
            )));
        }
    }
    for c in 0..nc {
        if gs.check_degree(c) < 2 {
            return Err(WpError::NotSlushGraph(format!("check {c} has degree < 2")));
        }
    }
    // union-find over variables (0..nv) and degree-two checks (nv..)
    let deg2: Vec<usize> = (0..nc).filter(|&c| gs.check_degree(c) == 2).collect();
    let mut uf = DisjointSets::new(nv + deg2.len());
    let mut n_edges_prime = 0usize;
    for (k, &c) in deg2.iter().enumerate() {
        for &(v, m) in gs.check_adj(c) {
            uf.union(nv + k, v);
            n_edges_prime += m as usize;
        }
    }
    // components of the degree-two subgraph (isolated variables count)
    let mut comp_id = vec![usize::MAX; nv + deg2.len()];
    let mut component_of = vec![0usize; nv];
    let mut n_components = 0usize;
    for v in 0..nv {
        let r = uf.find(v);
        if comp_id[r] == usize::MAX {
            comp_id[r] = n_components;
            n_components += 1;
        }
        component_of[v] = comp_id[r];
    }
    // a component made of checks only cannot occur (every check has edges)
    debug_assert!((0..deg2.len()).all(|k| comp_id[uf.find(nv + k)] != usize::MAX));
    let n_nodes_prime = nv + deg2.len();
    let cycle_rank = n_edges_prime + n_components - n_nodes_prime;

    let kept_checks: Vec<usize> = (0..nc).filter(|&c| gs.check_degree(c) >= 3).collect();
    let mut contracted = BitMatrix::zeros(kept_checks.len(), n_components);
    for (row, &c) in kept_checks.iter().enumerate() {
        let mut parity = vec![0u32; n_components];
        for &(v, m) in gs.check_adj(c) {
            parity[component_of[v]] += m;
        }
        for (comp, &p) in parity.iter().enumerate() {
            if p % 2 == 1 {
                contracted.set(row, comp, true);
            }
        }
    }
    Ok(ContractionMap {
        component_of,
        cycle_rank,
        contracted,
        kept_checks,
    })
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so component ids follow least indices
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// True if every check touching `vars` meets it in at least two columns.
pub fn is_flipper(a: &BitMatrix, vars: &[usize]) -> bool {
    let mut in_set = vec![false; a.n_cols()];
    for &v in vars {
        in_set[v] = true;
    }
    for i in 0..a.n_rows() {
        let hits = a.row(i).ones().filter(|&j| in_set[j]).count();
        if hits == 1 {
            return false;
        }
    }
    true
}

/// All flippers of size at most `max_size`, by exhaustive subset search.
pub fn enumerate_flippers(a: &BitMatrix, max_size: usize) -> Result<Vec<Vec<usize>>, WpError> {
    let n = a.n_cols();
    if n > 25 {
        return Err(WpError::SizeGuard {
            limit: 25,
            actual: n,
        });
    }
    let row_masks: Vec<u32> = (0..a.n_rows())
        .map(|i| a.row(i).ones().fold(0u32, |acc, j| acc | (1 << j)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        if (mask.count_ones() as usize) > max_size {
            continue;
        }
        if row_masks.iter().all(|&r| {
            let hit = r & mask;
            hit == 0 || hit.count_ones() >= 2
        }) {
            out.push((0..n).filter(|&j| (mask >> j) & 1 == 1).collect());
        }
    }
    Ok(out)
}

/// The canonical flipper: slush variables that are not frozen within the
/// slush minor, returned as original variable indices.
pub fn canonical_flipper(a: &BitMatrix, dec: &SlushDecomposition) -> Vec<usize> {
    let minor = slush_minor(a, dec);
    let frozen = frozen_set(&minor, &minor.rank_profile());
    let mut drop = vec![false; dec.v_s.len()];
    for &i in &frozen {
        drop[i] = true;
    }
    dec.v_s
        .iter()
        .enumerate()
        .filter(|&(i, _)| !drop[i])
        .map(|(_, &v)| v)
        .collect()
}

/// Standard messages, marks and the simple-update discrepancy count.
#[derive(Clone, Debug)]
pub struct StandardMessages {
    pub edges: Vec<(usize, usize)>,
    pub var_to_check: Vec<StdMsg>,
    pub check_to_var: Vec<StdMsg>,
    pub var_marks: Vec<Mark>,
    pub check_marks: Vec<Mark>,
    pub discrepancy_count: usize,
}

/// Edge budget for the standard-message oracle; each directed message
/// costs one elimination, so this is a desk-scale tool.
pub const STANDARD_MESSAGE_EDGE_LIMIT: usize = 2_000;

/// Computes the algebraic per-edge messages.
///
/// The message from a variable to a check reports whether the variable is
/// frozen once that check's row is deleted; the reverse message reports
/// whether the variable is frozen once every other row incident to it is
/// deleted. Marks aggregate incoming frozen messages per node, and the
/// discrepancy count measures how far the messages are from being a fixed
/// point of the two-valued update.
pub fn standard_messages(a: &BitMatrix) -> Result<StandardMessages, WpError> {
    let n_edges = a.count_ones();
    if n_edges > STANDARD_MESSAGE_EDGE_LIMIT {
        return Err(WpError::SizeGuard {
            limit: STANDARD_MESSAGE_EDGE_LIMIT,
            actual: n_edges,
        });
    }
    let g = TannerGraph::from_matrix(a);
    if !g.is_simple() {
        return Err(WpError::Multigraph);
    }
    let is_frozen = |m: &BitMatrix, v: usize| -> bool {
        m.rank_profile()
            .frozen_set(m.n_cols())
            .binary_search(&v)
            .is_ok()
    };
    let mut edges = Vec::with_capacity(n_edges);
    let mut v2c = Vec::with_capacity(n_edges);
    let mut c2v = Vec::with_capacity(n_edges);
    for v in 0..g.n_vars() {
        for &(c, _) in g.var_adj(v) {
            edges.push((v, c));
            let without_c = a.drop_rows(&[c]);
            v2c.push(if is_frozen(&without_c, v) {
                StdMsg::F
            } else {
                StdMsg::U
            });
            let others: Vec<usize> = g
                .var_adj(v)
                .iter()
                .map(|&(b, _)| b)
                .filter(|&b| b != c)
                .collect();
            let only_c = a.drop_rows(&others);
            c2v.push(if is_frozen(&only_c, v) {
                StdMsg::F
            } else {
                StdMsg::U
            });
        }
    }
    // per-node incoming tallies drive the marks
    let mut var_edges = vec![Vec::new(); g.n_vars()];
    let mut check_edges = vec![Vec::new(); g.n_checks()];
    for (e, &(v, c)) in edges.iter().enumerate() {
        var_edges[v].push(e);
        check_edges[c].push(e);
    }
    let var_marks: Vec<Mark> = (0..g.n_vars())
        .map(|v| {
            let nf = var_edges[v]
                .iter()
                .filter(|&&e| c2v[e] == StdMsg::F)
                .count();
            match nf {
                0 => Mark::U,
                1 => Mark::Star,
                _ => Mark::F,
            }
        })
        .collect();
    let check_marks: Vec<Mark> = (0..g.n_checks())
        .map(|c| {
            let deg = check_edges[c].len();
            let nf = check_edges[c]
                .iter()
                .filter(|&&e| v2c[e] == StdMsg::F)
                .count();
            if nf == deg {
                Mark::F // vacuously frozen when isolated
            } else if nf + 1 == deg {
                Mark::Star
            } else {
                Mark::U
            }
        })
        .collect();
    // simple update: one two-valued sweep over the standard messages
    let mut discrepancy_count = 0usize;
    for (e, &(v, c)) in edges.iter().enumerate() {
        let hat_v2c = var_edges[v]
            .iter()
            .any(|&e2| e2 != e && c2v[e2] == StdMsg::F);
        let hat_v2c = if hat_v2c { StdMsg::F } else { StdMsg::U };
        if hat_v2c != v2c[e] {
            discrepancy_count += 1;
        }
        let hat_c2v = check_edges[c]
            .iter()
            .all(|&e2| e2 == e || v2c[e2] == StdMsg::F);
        let hat_c2v = if hat_c2v { StdMsg::F } else { StdMsg::U };
        if hat_c2v != c2v[e] {
            discrepancy_count += 1;
        }
    }
    Ok(StandardMessages {
        edges,
        var_to_check: v2c,
        check_to_var: c2v,
        var_marks,
        check_marks,
        discrepancy_count,
    })
}
