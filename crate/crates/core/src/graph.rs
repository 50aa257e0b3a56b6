//! Tanner graphs and the random generators.
//!
//! A Tanner graph is the bipartite variable/check view of an F2 matrix:
//! variable nodes are columns, check nodes are rows, with an edge per
//! nonzero entry. Multigraphs (as produced by the pairing model) carry
//! edge multiplicities; most downstream consumers require simple graphs.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytics::AnalyticProfile;
use crate::gf2::{self, BitMatrix, ParseError};
use crate::wp::Msg;

/// Largest Poisson rate accepted by the inversion sampler.
pub const POISSON_MAX_RATE: f64 = 30.0;

#[derive(Debug)]
pub enum GraphError {
    InvalidParam(String),
    DegreeSumMismatch { vars: usize, checks: usize },
    RejectionBudget { attempts: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            GraphError::DegreeSumMismatch { vars, checks } => {
                write!(f, "degree sums differ: variables {vars}, checks {checks}")
            }
            GraphError::RejectionBudget { attempts } => {
                write!(f, "no simple pairing found after {attempts} attempts")
            }
        }
    }
}

impl std::error::Error for GraphError {}

/// Bipartite variable/check adjacency with multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TannerGraph {
    n_vars: usize,
    n_checks: usize,
    /// Per variable: sorted `(check id, multiplicity)`.
    var_adj: Vec<Vec<(usize, u32)>>,
    /// Per check: sorted `(variable id, multiplicity)`.
    check_adj: Vec<Vec<(usize, u32)>>,
}

impl TannerGraph {
    pub fn new(n_vars: usize, n_checks: usize, edges: &[(usize, usize)]) -> Self {
        let mut var_adj = vec![Vec::new(); n_vars];
        let mut check_adj = vec![Vec::new(); n_checks];
        let mut sorted: Vec<(usize, usize)> = edges.to_vec();
        sorted.sort_unstable();
        for &(v, c) in &sorted {
            assert!(v < n_vars && c < n_checks, "edge ({v},{c}) out of range");
            push_mult(&mut var_adj[v], c);
            push_mult(&mut check_adj[c], v);
        }
        Self {
            n_vars,
            n_checks,
            var_adj,
            check_adj,
        }
    }

    pub fn from_matrix(a: &BitMatrix) -> Self {
        let mut edges = Vec::with_capacity(a.count_ones());
        for i in 0..a.n_rows() {
            for j in a.row(i).ones() {
                edges.push((j, i));
            }
        }
        Self::new(a.n_cols(), a.n_rows(), &edges)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn var_adj(&self, v: usize) -> &[(usize, u32)] {
        &self.var_adj[v]
    }

    pub fn check_adj(&self, c: usize) -> &[(usize, u32)] {
        &self.check_adj[c]
    }

    /// Degree of a variable counting multiplicities.
    pub fn var_degree(&self, v: usize) -> usize {
        self.var_adj[v].iter().map(|&(_, m)| m as usize).sum()
    }

    /// Degree of a check counting multiplicities.
    pub fn check_degree(&self, c: usize) -> usize {
        self.check_adj[c].iter().map(|&(_, m)| m as usize).sum()
    }

    pub fn n_edges(&self) -> usize {
        self.var_adj
            .iter()
            .flatten()
            .map(|&(_, m)| m as usize)
            .sum()
    }

    pub fn is_simple(&self) -> bool {
        self.var_adj.iter().flatten().all(|&(_, m)| m == 1)
    }

    /// The 0/1 bi-adjacency matrix with entries reduced mod 2; for simple
    /// graphs this is the exact matrix the graph represents.
    pub fn biadjacency_parity(&self) -> BitMatrix {
        let mut a = BitMatrix::zeros(self.n_checks, self.n_vars);
        for (c, adj) in self.check_adj.iter().enumerate() {
            for &(v, m) in adj {
                if m % 2 == 1 {
                    a.set(c, v, true);
                }
            }
        }
        a
    }

    /// Serialises in the shared sparse text format; multiplicities appear
    /// as repeated `i j` lines (row = check, column = variable).
    pub fn write_sparse(&self) -> String {
        let mut out = format!("{} {}\n", self.n_checks, self.n_vars);
        for (c, adj) in self.check_adj.iter().enumerate() {
            for &(v, m) in adj {
                for _ in 0..m {
                    out.push_str(&format!("{c} {v}\n"));
                }
            }
        }
        out
    }

    pub fn read_sparse(text: &str) -> Result<Self, ParseError> {
        let (m, n, pairs) = gf2::parse_entries(text)?;
        let edges: Vec<(usize, usize)> = pairs.into_iter().map(|(i, j)| (j, i)).collect();
        Ok(Self::new(n, m, &edges))
    }

    /// True if the radius-`radius` ball around variable `v` contains a cycle.
    pub fn ball_contains_cycle(&self, v: usize, radius: usize) -> bool {
        // BFS over the bipartite graph; a revisit of any node (other than
        // via the tree edge walked in) closes a cycle inside the ball.
        if self.var_adj[v].iter().any(|&(_, m)| m > 1) {
            return true;
        }
        let mut seen_var = vec![false; self.n_vars];
        let mut seen_check = vec![false; self.n_checks];
        seen_var[v] = true;
        // frontier of (node, is_var, parent)
        let mut frontier: Vec<(usize, bool, usize)> = vec![(v, true, usize::MAX)];
        for _ in 0..radius {
            let mut next = Vec::new();
            for &(u, is_var, parent) in &frontier {
                let adj = if is_var {
                    &self.var_adj[u]
                } else {
                    &self.check_adj[u]
                };
                for &(w, m) in adj {
                    if w == parent {
                        if m > 1 {
                            return true;
                        }
                        continue;
                    }
                    if m > 1 {
                        return true;
                    }
                    let seen = if is_var {
                        &mut seen_check
                    } else {
                        &mut seen_var
                    };
                    if seen[w] {
                        return true;
                    }
                    seen[w] = true;
                    next.push((w, !is_var, u));
                }
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        false
    }
}

fn push_mult(adj: &mut Vec<(usize, u32)>, id: usize) {
    if let Some(last) = adj.last_mut() {
        if last.0 == id {
            last.1 += 1;
            return;
        }
    }
    adj.push((id, 1));
}

/// Deterministic per-context RNG stream derived from a master seed.
///
/// Uses a splitmix64 round on the (seed, context) pair so distinct trials
/// get well-separated ChaCha streams regardless of scheduling.
pub fn stream(master_seed: u64, context: u64) -> ChaCha8Rng {
    let mut z = master_seed ^ context.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut x = z;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
        chunk.copy_from_slice(&x.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Poisson sampler by inversion; exact and reproducible for rates up to
/// [`POISSON_MAX_RATE`].
pub fn poisson<R: Rng>(lambda: f64, rng: &mut R) -> u64 {
    assert!(
        (0.0..=POISSON_MAX_RATE).contains(&lambda),
        "poisson rate {lambda} outside [0, {POISSON_MAX_RATE}]"
    );
    if lambda == 0.0 {
        return 0;
    }
    let u: f64 = uniform_open01(rng);
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut acc = p;
    while u > acc && p > 0.0 {
        k += 1;
        p *= lambda / k as f64;
        acc += p;
    }
    k
}

/// Poisson conditioned on being at least one, sampled by rejection.
pub fn poisson_ge1<R: Rng>(lambda: f64, rng: &mut R) -> u64 {
    assert!(lambda > 0.0, "poisson_ge1 needs a positive rate");
    loop {
        let k = poisson(lambda, rng);
        if k >= 1 {
            return k;
        }
    }
}

fn uniform_open01<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u > 0.0 {
            return u;
        }
    }
}

/// An n-by-n matrix with i.i.d. Bernoulli(min(d/n, 1)) entries.
///
/// Sampling skips between nonzeros geometrically, so the cost is
/// proportional to the number of ones rather than n^2.
pub fn gen_bernoulli<R: Rng>(n: usize, d: f64, rng: &mut R) -> Result<BitMatrix, GraphError> {
    if d < 0.0 || !d.is_finite() {
        return Err(GraphError::InvalidParam(format!(
            "density d={d} must be >= 0"
        )));
    }
    let mut a = BitMatrix::zeros(n, n);
    if n == 0 || d == 0.0 {
        return Ok(a);
    }
    let p = (d / n as f64).min(1.0);
    if p >= 1.0 {
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, true);
            }
        }
        return Ok(a);
    }
    let total = n as u128 * n as u128;
    let log1m = (-p).ln_1p(); // ln(1-p) < 0
    let mut idx: u128 = 0;
    loop {
        let u = uniform_open01(rng);
        let gap = (u.ln() / log1m).floor();
        // gap is the count of leading zeros before the next one
        if !gap.is_finite() || gap >= total as f64 {
            break;
        }
        idx += gap as u128;
        if idx >= total {
            break;
        }
        a.set((idx / n as u128) as usize, (idx % n as u128) as usize, true);
        idx += 1;
        if idx >= total {
            break;
        }
    }
    Ok(a)
}

/// Uniform pairing of variable clones to check clones, contracted to a
/// multigraph. With `require_simple` the pairing is resampled until it is
/// simple; returns the graph and the number of attempts used.
pub fn pairing_model<R: Rng>(
    var_degs: &[usize],
    check_degs: &[usize],
    rng: &mut R,
    require_simple: bool,
    max_rejects: usize,
) -> Result<(TannerGraph, usize), GraphError> {
    let sv: usize = var_degs.iter().sum();
    let sc: usize = check_degs.iter().sum();
    if sv != sc {
        return Err(GraphError::DegreeSumMismatch {
            vars: sv,
            checks: sc,
        });
    }
    let mut var_clones = Vec::with_capacity(sv);
    for (v, &dg) in var_degs.iter().enumerate() {
        var_clones.extend(std::iter::repeat_n(v, dg));
    }
    let mut check_clones = Vec::with_capacity(sc);
    for (c, &dg) in check_degs.iter().enumerate() {
        check_clones.extend(std::iter::repeat_n(c, dg));
    }
    let mut attempts = 0;
    loop {
        attempts += 1;
        // Fisher-Yates on the check clone list gives a uniform matching
        let mut perm = check_clones.clone();
        for i in (1..perm.len()).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let edges: Vec<(usize, usize)> = var_clones.iter().copied().zip(perm).collect();
        let g = TannerGraph::new(var_degs.len(), check_degs.len(), &edges);
        if !require_simple || g.is_simple() {
            return Ok((g, attempts));
        }
        if attempts > max_rejects {
            return Err(GraphError::RejectionBudget { attempts });
        }
    }
}

/// Node kind in a two-type tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Variable,
    Check,
}

impl NodeKind {
    pub fn other(self) -> Self {
        match self {
            NodeKind::Variable => NodeKind::Check,
            NodeKind::Check => NodeKind::Variable,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub kind: NodeKind,
    pub parent: Option<usize>,
    pub msg_to_parent: Option<Msg>,
    pub level: usize,
}

/// A rooted two-type tree, optionally decorated with messages sent from
/// each non-root node to its parent. Nodes are stored in BFS order; the
/// root is node 0.
#[derive(Clone, Debug)]
pub struct DecoratedTree {
    pub nodes: Vec<TreeNode>,
    pub depth: usize,
}

impl DecoratedTree {
    pub fn is_messaged(&self) -> bool {
        self.nodes.iter().skip(1).all(|n| n.msg_to_parent.is_some())
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&j| self.nodes[j].parent == Some(i))
            .collect()
    }

    /// Children lists for all nodes in one pass.
    pub fn children_table(&self) -> Vec<Vec<usize>> {
        let mut table = vec![Vec::new(); self.nodes.len()];
        for (j, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                table[p].push(j);
            }
        }
        table
    }

    /// Canonical code of the messaged tree under root-preserving
    /// isomorphism: children are sorted recursively, so two trees get the
    /// same code iff they are isomorphic with identical message labels.
    pub fn canonical_code(&self) -> String {
        let table = self.children_table();
        fn code(t: &DecoratedTree, table: &[Vec<usize>], i: usize) -> String {
            let kind = match t.nodes[i].kind {
                NodeKind::Variable => 'v',
                NodeKind::Check => 'c',
            };
            let msg = match t.nodes[i].msg_to_parent {
                Some(Msg::F) => 'f',
                Some(Msg::S) => 's',
                Some(Msg::U) => 'u',
                None => '-',
            };
            let mut kids: Vec<String> = table[i].iter().map(|&j| code(t, table, j)).collect();
            kids.sort();
            format!("{kind}{msg}({})", kids.join(""))
        }
        code(self, &table, 0)
    }
}

/// Samples a two-type Galton-Watson tree with Po(d) offspring.
///
/// In messaged mode the root's children carry i.i.d. messages from the
/// stationary edge distribution and deeper offspring counts follow the
/// message-conditional rates, so the tree is decorated on the fly.
pub fn sample_tree<R: Rng>(
    root_type: NodeKind,
    depth: usize,
    d: f64,
    messaged: Option<&AnalyticProfile>,
    rng: &mut R,
) -> Result<DecoratedTree, GraphError> {
    if !(0.0..=POISSON_MAX_RATE).contains(&d) {
        return Err(GraphError::InvalidParam(format!(
            "offspring rate d={d} outside [0, {POISSON_MAX_RATE}]"
        )));
    }
    match messaged {
        None => Ok(sample_plain_tree(root_type, depth, d, rng)),
        Some(profile) => Ok(sample_messaged_tree(root_type, depth, d, profile, rng)),
    }
}

fn sample_plain_tree<R: Rng>(
    root_type: NodeKind,
    depth: usize,
    d: f64,
    rng: &mut R,
) -> DecoratedTree {
    let mut nodes = vec![TreeNode {
        kind: root_type,
        parent: None,
        msg_to_parent: None,
        level: 0,
    }];
    let mut frontier = vec![0usize];
    for level in 1..=depth {
        let mut next = Vec::new();
        for &p in &frontier {
            let kind = nodes[p].kind.other();
            for _ in 0..poisson(d, rng) {
                nodes.push(TreeNode {
                    kind,
                    parent: Some(p),
                    msg_to_parent: None,
                    level,
                });
                next.push(nodes.len() - 1);
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    DecoratedTree { nodes, depth }
}

fn draw_msg<R: Rng>(probs: [f64; 3], rng: &mut R) -> Msg {
    let u: f64 = rng.gen::<f64>();
    if u < probs[0] {
        Msg::F
    } else if u < probs[0] + probs[1] {
        Msg::S
    } else {
        Msg::U
    }
}

fn sample_messaged_tree<R: Rng>(
    root_type: NodeKind,
    depth: usize,
    d: f64,
    profile: &AnalyticProfile,
    rng: &mut R,
) -> DecoratedTree {
    let a_star = profile.alpha_star;
    let a_up = profile.alpha_upper;
    let lambda = profile.lambda;
    let mut nodes = vec![TreeNode {
        kind: root_type,
        parent: None,
        msg_to_parent: None,
        level: 0,
    }];
    if depth == 0 {
        return DecoratedTree { nodes, depth };
    }
    // root children: i.i.d. messages from the stationary edge law
    let root_msg_probs = match root_type {
        NodeKind::Variable => [1.0 - a_up, a_up - a_star, a_star],
        NodeKind::Check => [a_star, a_up - a_star, 1.0 - a_up],
    };
    let mut frontier = Vec::new();
    for _ in 0..poisson(d, rng) {
        let msg = draw_msg(root_msg_probs, rng);
        nodes.push(TreeNode {
            kind: root_type.other(),
            parent: Some(0),
            msg_to_parent: Some(msg),
            level: 1,
        });
        frontier.push(nodes.len() - 1);
    }
    for level in 2..=depth {
        let mut next = Vec::new();
        for &p in &frontier {
            let kind = nodes[p].kind.other();
            let msg = nodes[p].msg_to_parent.unwrap();
            // (f, s, u) offspring counts conditioned on the parent's own
            // message; a zero in a slot means no children of that kind
            let counts: [u64; 3] = match (nodes[p].kind, msg) {
                // check sending f: every child reports frozen
                (NodeKind::Check, Msg::F) => [poisson(a_star * d, rng), 0, 0],
                // check sending s: no unfrozen child, at least one slush
                (NodeKind::Check, Msg::S) => {
                    [poisson(a_star * d, rng), poisson_ge1_or0(lambda, rng), 0]
                }
                // check sending u: at least one child reports unfrozen
                (NodeKind::Check, Msg::U) => [
                    poisson(a_star * d, rng),
                    poisson(lambda, rng),
                    poisson_ge1_or0(d * (1.0 - a_up), rng),
                ],
                // variable sending f: at least one incoming frozen
                (NodeKind::Variable, Msg::F) => [
                    poisson_ge1_or0(d * (1.0 - a_up), rng),
                    poisson(lambda, rng),
                    poisson(a_star * d, rng),
                ],
                // variable sending s: no incoming frozen, some slush
                (NodeKind::Variable, Msg::S) => {
                    [0, poisson_ge1_or0(lambda, rng), poisson(a_star * d, rng)]
                }
                // variable sending u: all incoming unfrozen
                (NodeKind::Variable, Msg::U) => [0, 0, poisson(a_star * d, rng)],
            };
            for (slot, &cnt) in counts.iter().enumerate() {
                let child_msg = [Msg::F, Msg::S, Msg::U][slot];
                for _ in 0..cnt {
                    nodes.push(TreeNode {
                        kind,
                        parent: Some(p),
                        msg_to_parent: Some(child_msg),
                        level,
                    });
                    next.push(nodes.len() - 1);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    DecoratedTree { nodes, depth }
}

/// `poisson_ge1` that tolerates a vanishing rate (degenerate profiles
/// with an empty slush window have rate 0 and then the count is 0).
fn poisson_ge1_or0<R: Rng>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        0
    } else {
        poisson_ge1(lambda, rng)
    }
}

/// Redecorates a plain depth-t tree by drawing leaf-layer messages from
/// the stationary law and propagating every internal message upward with
/// the update rules.
pub fn decorate_by_leaf_init<R: Rng>(
    tree: &DecoratedTree,
    profile: &AnalyticProfile,
    rng: &mut R,
) -> DecoratedTree {
    let a_star = profile.alpha_star;
    let a_up = profile.alpha_upper;
    let mut out = tree.clone();
    let table = out.children_table();
    // process by decreasing level so children are decorated first
    let mut order: Vec<usize> = (1..out.nodes.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(out.nodes[i].level));
    for i in order {
        let msg = if out.nodes[i].level == tree.depth {
            // leaf layer: i.i.d. draw from the stationary edge law for
            // the direction the leaf sends in
            let probs = match out.nodes[i].kind {
                NodeKind::Variable => [a_star, a_up - a_star, 1.0 - a_up],
                NodeKind::Check => [1.0 - a_up, a_up - a_star, a_star],
            };
            draw_msg(probs, rng)
        } else {
            let kid_msgs: Vec<Msg> = table[i]
                .iter()
                .map(|&j| out.nodes[j].msg_to_parent.unwrap())
                .collect();
            match out.nodes[i].kind {
                // check: frozen if all children frozen (vacuously true),
                // unfrozen if any child unfrozen, slush otherwise
                NodeKind::Check => {
                    if kid_msgs.iter().all(|&m| m == Msg::F) {
                        Msg::F
                    } else if kid_msgs.contains(&Msg::U) {
                        Msg::U
                    } else {
                        Msg::S
                    }
                }
                // variable: unfrozen if all children unfrozen (vacuously
                // true), frozen if any child frozen, slush otherwise
                NodeKind::Variable => {
                    if kid_msgs.iter().all(|&m| m == Msg::U) {
                        Msg::U
                    } else if kid_msgs.contains(&Msg::F) {
                        Msg::F
                    } else {
                        Msg::S
                    }
                }
            }
        };
        out.nodes[i].msg_to_parent = Some(msg);
    }
    out
}

/// Index sets marking where a perturbation embedded its trees.
#[derive(Clone, Debug, Default)]
pub struct PerturbationMarkers {
    /// Variables hosting depth-2 tree roots.
    pub tree_var_roots: Vec<usize>,
    /// Checks hosting depth-1 tree roots.
    pub tree_check_roots: Vec<usize>,
    /// Existing variables the tree leaves were attached to.
    pub attachment_vars: Vec<usize>,
    pub succeeded: bool,
}

/// Grafts `omega1` depth-2 variable-rooted trees and `omega2` depth-1
/// check-rooted trees onto `g`.
///
/// Interior tree nodes are embedded onto the lowest-index isolated nodes
/// (making runs reproducible given the stream); leaf-layer variables are
/// attached to uniformly random existing variables, drawn independently.
/// If isolated hosts run short, or two leaves of the same check collide
/// (which would create a multi-edge), the original graph is returned
/// unchanged with `succeeded = false`. The attachment set excludes the
/// embedded roots, so the marker sets are pairwise disjoint on success.
pub fn thimblerig<R: Rng>(
    g: &TannerGraph,
    omega1: usize,
    omega2: usize,
    d: f64,
    rng: &mut R,
) -> Result<(TannerGraph, PerturbationMarkers), GraphError> {
    if !(0.0..=POISSON_MAX_RATE).contains(&d) {
        return Err(GraphError::InvalidParam(format!(
            "offspring rate d={d} outside [0, {POISSON_MAX_RATE}]"
        )));
    }
    let trees2: Vec<DecoratedTree> = (0..omega1)
        .map(|_| sample_plain_tree(NodeKind::Variable, 2, d, rng))
        .collect();
    let trees1: Vec<DecoratedTree> = (0..omega2)
        .map(|_| sample_plain_tree(NodeKind::Check, 1, d, rng))
        .collect();

    let failed = |g: &TannerGraph| (g.clone(), PerturbationMarkers::default());

    let mut isolated_vars = (0..g.n_vars)
        .filter(|&v| g.var_degree(v) == 0)
        .collect::<Vec<_>>()
        .into_iter();
    let mut isolated_checks = (0..g.n_checks)
        .filter(|&c| g.check_degree(c) == 0)
        .collect::<Vec<_>>()
        .into_iter();

    let mut root_vars = vec![false; g.n_vars];
    let mut markers = PerturbationMarkers {
        succeeded: true,
        ..Default::default()
    };
    let mut attachments: Vec<usize> = Vec::new();
    let mut new_edges: Vec<(usize, usize)> = Vec::new();

    // interior levels get isolated hosts, the final (variable) layer
    // attaches to uniform random existing variables
    for (tree, leaf_level) in trees2
        .iter()
        .map(|t| (t, 2))
        .chain(trees1.iter().map(|t| (t, 1)))
    {
        let mut host = vec![usize::MAX; tree.nodes.len()];
        let mut parent_targets: Vec<(usize, usize)> = Vec::new(); // (parent, leaf host)
        for (i, node) in tree.nodes.iter().enumerate() {
            let h = if node.level == leaf_level {
                if g.n_vars == 0 {
                    return Ok(failed(g));
                }
                let v = rng.gen_range(0..g.n_vars);
                let p = node.parent.expect("leaf has a parent");
                if parent_targets.contains(&(p, v)) {
                    return Ok(failed(g)); // two leaves of one check collide
                }
                parent_targets.push((p, v));
                attachments.push(v);
                v
            } else {
                match node.kind {
                    NodeKind::Variable => {
                        let Some(v) = isolated_vars.next() else {
                            return Ok(failed(g));
                        };
                        root_vars[v] = true;
                        v
                    }
                    NodeKind::Check => {
                        let Some(c) = isolated_checks.next() else {
                            return Ok(failed(g));
                        };
                        c
                    }
                }
            };
            host[i] = h;
            if i == 0 {
                match node.kind {
                    NodeKind::Variable => markers.tree_var_roots.push(h),
                    NodeKind::Check => markers.tree_check_roots.push(h),
                }
            }
            if let Some(p) = node.parent {
                let (v, c) = match node.kind {
                    NodeKind::Variable => (h, host[p]),
                    NodeKind::Check => (host[p], h),
                };
                new_edges.push((v, c));
            }
        }
    }

    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(g.n_edges() + new_edges.len());
    for (v, adj) in g.var_adj.iter().enumerate() {
        for &(c, m) in adj {
            for _ in 0..m {
                edges.push((v, c));
            }
        }
    }
    edges.extend(new_edges);
    attachments.sort_unstable();
    attachments.dedup();
    attachments.retain(|&v| !root_vars[v]);
    markers.attachment_vars = attachments;
    markers.tree_var_roots.sort_unstable();
    markers.tree_check_roots.sort_unstable();
    Ok((TannerGraph::new(g.n_vars, g.n_checks, &edges), markers))
}

/// How `pin` inserts the unit rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PinMode {
    /// Append `t` fresh unit rows at uniformly random coordinates.
    Append,
    /// Activate `t` distinct all-zero rows with one random entry each;
    /// if fewer than `t+1` zero rows exist the matrix is unchanged.
    Replace,
}

pub fn pin<R: Rng>(a: &BitMatrix, t: usize, mode: PinMode, rng: &mut R) -> BitMatrix {
    let mut out = a.clone();
    if t == 0 || a.n_cols() == 0 {
        return out;
    }
    match mode {
        PinMode::Append => {
            for _ in 0..t {
                let j = rng.gen_range(0..a.n_cols());
                let mut row = crate::gf2::BitVec::zeros(a.n_cols());
                row.set(j, true);
                out.push_row(row);
            }
        }
        PinMode::Replace => {
            let zero_rows: Vec<usize> = (0..a.n_rows()).filter(|&i| a.row(i).is_zero()).collect();
            if zero_rows.len() <= t {
                return out;
            }
            // partial Fisher-Yates for t distinct zero rows
            let mut pool = zero_rows;
            for k in 0..t {
                let j = rng.gen_range(k..pool.len());
                pool.swap(k, j);
                let col = rng.gen_range(0..a.n_cols());
                out.set(pool[k], col, true);
            }
        }
    }
    out
}
