//! Maximum independent sets of conflict graphs.
//!
//! Exact search first applies reductions that never change the optimum:
//! closed twins are collapsed to one vertex, isolated vertices are taken, and
//! a vertex `v` with a neighbour `u` whose closed neighbourhood is contained
//! in that of `v` is deleted. What remains
//! is split into components, each solved as a maximum clique of the
//! complement with a greedy-colouring bound.

/// Undirected simple graph as sorted adjacency lists.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n] }
    }

    /// Builds a graph from an edge list; self-loops and duplicates are dropped.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u != v {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Graph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        let mut mark = vec![false; self.len()];
        for &v in set {
            if mark[v] {
                return false;
            }
            mark[v] = true;
        }
        set.iter().all(|&v| self.adj[v].iter().all(|&w| !mark[w as usize]))
    }
}

/// Outcome of an exact search. When the node budget runs out, `set` is the
/// best independent set found and `exact` is false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MisResult {
    pub set: Vec<usize>,
    pub exact: bool,
    pub nodes: u64,
}

/// Maximal independent set taking vertices in index order.
pub fn greedy_independent_set(g: &Graph) -> Vec<usize> {
    let mut blocked = vec![false; g.len()];
    let mut out = Vec::new();
    for v in 0..g.len() {
        if !blocked[v] {
            out.push(v);
            for &w in g.neighbors(v) {
                blocked[w as usize] = true;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Bitsets

#[derive(Clone, Debug)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.words[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    fn clear(&mut self, i: usize) {
        self.words[i >> 6] &= !(1 << (i & 63));
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .position(|&w| w != 0)
            .map(|k| k * 64 + self.words[k].trailing_zeros() as usize)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + b)
                }
            })
        })
    }
}

// ---------------------------------------------------------------------------
// Exact search

/// Exact maximum independent set within `max_nodes` branch-and-bound nodes.
pub fn maximum_independent_set(g: &Graph, max_nodes: u64) -> MisResult {
    maximum_independent_set_ordered(g, None, max_nodes)
}

/// As [`maximum_independent_set`], with the branching order taken from `rank`
/// (lower first) instead of conflict degree.
///
/// The colouring bound is only as good as the order: when vertices carry
/// positions and conflicts are local, sorting by position turns colour classes
/// into runs of nearby vertices, which is close to a minimum clique cover.
pub fn maximum_independent_set_ordered(g: &Graph, rank: Option<&[usize]>, max_nodes: u64) -> MisResult {
    if let Some(r) = rank {
        assert_eq!(r.len(), g.len(), "one rank per vertex");
    }
    let mut chosen = Vec::new();
    let mut exact = true;
    let mut nodes = 0u64;
    for comp in components(g, &twin_representatives(g)) {
        if comp.len() == 1 {
            chosen.push(comp[0]);
            continue;
        }
        let remaining = max_nodes.saturating_sub(nodes);
        let r = solve_component(g, &comp, rank, remaining);
        nodes += r.nodes;
        exact &= r.exact;
        chosen.extend(r.set);
    }
    chosen.sort_unstable();
    MisResult { set: chosen, exact, nodes }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `N[u] = N[v]` for distinct `u`, `v`.
fn closed_twins(g: &Graph, u: usize, v: usize) -> bool {
    let (a, b) = (g.neighbors(u), g.neighbors(v));
    if a.len() != b.len() || a.binary_search(&(v as u32)).is_err() {
        return false;
    }
    let a = a.iter().filter(|&&w| w as usize != v);
    let b = b.iter().filter(|&&w| w as usize != u);
    a.eq(b)
}

/// `false` for every vertex with a lower-indexed closed twin. Twins are
/// adjacent and interchangeable, so an optimum uses at most one of them.
fn twin_representatives(g: &Graph) -> Vec<bool> {
    let mut keep = vec![true; g.len()];
    let mut groups: std::collections::HashMap<u64, Vec<usize>> = std::collections::HashMap::new();
    for v in 0..g.len() {
        if g.neighbors(v).is_empty() {
            continue;
        }
        let h = g
            .neighbors(v)
            .iter()
            .fold(splitmix(v as u64), |acc, &w| acc.wrapping_add(splitmix(w as u64)));
        let reps = groups.entry(h).or_default();
        if reps.iter().any(|&r| closed_twins(g, r, v)) {
            keep[v] = false;
        } else {
            reps.push(v);
        }
    }
    keep
}

fn components(g: &Graph, alive: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.len()];
    let mut out = Vec::new();
    for s in 0..g.len() {
        if seen[s] || !alive[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for &w in g.neighbors(v) {
                let w = w as usize;
                if alive[w] && !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Local view of one component with bitset adjacency.
struct Local {
    vertices: Vec<usize>,
    adj: Vec<BitSet>,
}

impl Local {
    fn new(g: &Graph, vertices: &[usize]) -> Self {
        let k = vertices.len();
        let mut index = std::collections::HashMap::with_capacity(k);
        for (i, &v) in vertices.iter().enumerate() {
            index.insert(v, i);
        }
        let adj = vertices
            .iter()
            .map(|&v| {
                let mut b = BitSet::new(k);
                for &w in g.neighbors(v) {
                    if let Some(&j) = index.get(&(w as usize)) {
                        b.set(j);
                    }
                }
                b
            })
            .collect();
        Local {
            vertices: vertices.to_vec(),
            adj,
        }
    }

    fn len(&self) -> usize {
        self.vertices.len()
    }
}

fn solve_component(g: &Graph, comp: &[usize], rank: Option<&[usize]>, max_nodes: u64) -> MisResult {
    let local = Local::new(g, comp);
    let k = local.len();
    let mut alive = BitSet::new(k);
    for i in 0..k {
        alive.set(i);
    }
    let mut taken: Vec<usize> = Vec::new();
    reduce(&local, &mut alive, &mut taken);

    let mut set: Vec<usize> = taken.iter().map(|&i| local.vertices[i]).collect();
    let mut exact = true;
    let mut nodes = 0;
    let kernel: Vec<usize> = alive.iter().collect();
    if !kernel.is_empty() {
        let kernel_global: Vec<usize> = kernel.iter().map(|&i| local.vertices[i]).collect();
        let mut alive_flags = vec![false; g.len()];
        for &v in &kernel_global {
            alive_flags[v] = true;
        }
        for sub in components(g, &alive_flags) {
            if sub.len() == 1 {
                set.push(sub[0]);
                continue;
            }
            let r = clique_search(&Local::new(g, &sub), rank, max_nodes.saturating_sub(nodes));
            nodes += r.nodes;
            exact &= r.exact;
            set.extend(r.set);
        }
    }
    MisResult { set, exact, nodes }
}

/// Applies the isolation and domination rules until neither fires.
fn reduce(local: &Local, alive: &mut BitSet, taken: &mut Vec<usize>) {
    let k = local.len();
    let mut deg: Vec<usize> = (0..k)
        .map(|v| local.adj[v].words.iter().zip(&alive.words).map(|(a, b)| (a & b).count_ones() as usize).sum())
        .collect();
    let remove = |v: usize, alive: &mut BitSet, deg: &mut Vec<usize>| {
        alive.clear(v);
        for w in local.adj[v].iter() {
            if alive.get(w) {
                deg[w] -= 1;
            }
        }
    };
    loop {
        let mut changed = false;
        for v in 0..k {
            if !alive.get(v) {
                continue;
            }
            if deg[v] == 0 {
                taken.push(v);
                remove(v, alive, &mut deg);
                changed = true;
                continue;
            }
            let dominated = local.adj[v].iter().any(|u| {
                alive.get(u) && deg[u] <= deg[v] && closed_subset(local, alive, u, v)
            });
            if dominated {
                remove(v, alive, &mut deg);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// `N[u] ⊆ N[v]` among alive vertices, for adjacent `u`, `v`.
fn closed_subset(local: &Local, alive: &BitSet, u: usize, v: usize) -> bool {
    let (au, av) = (&local.adj[u].words, &local.adj[v].words);
    for w in 0..au.len() {
        let mut extra = au[w] & alive.words[w] & !av[w];
        if w == v >> 6 {
            extra &= !(1u64 << (v & 63));
        }
        if extra != 0 {
            return false;
        }
    }
    true
}

/// Maximum clique of the complement of a (reduced, connected) component.
fn clique_search(local: &Local, rank: Option<&[usize]>, max_nodes: u64) -> MisResult {
    let k = local.len();
    // Order by rank, or by conflict degree with fewest conflicts first;
    // renumber so the colouring visits vertices in that order.
    let mut order: Vec<usize> = (0..k).collect();
    match rank {
        Some(r) => order.sort_by_key(|&v| (r[local.vertices[v]], v)),
        None => {
            let degree: Vec<usize> = (0..k).map(|v| local.adj[v].iter().count()).collect();
            order.sort_by_key(|&v| (degree[v], v));
        }
    }
    let mut pos = vec![0; k];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    // compatible[i]: vertices (new numbering) not in conflict with i
    let compatible: Vec<BitSet> = order
        .iter()
        .map(|&v| {
            let mut b = BitSet::new(k);
            for i in 0..k {
                b.set(i);
            }
            b.clear(pos[v]);
            for w in local.adj[v].iter() {
                b.clear(pos[w]);
            }
            b
        })
        .collect();

    let seed = min_degree_greedy(&compatible, k);
    let mut search = CliqueSearch {
        compatible: &compatible,
        best: seed,
        current: Vec::new(),
        nodes: 0,
        max_nodes,
        exhausted: false,
    };
    let mut all = BitSet::new(k);
    for i in 0..k {
        all.set(i);
    }
    search.expand(all);
    let set = search.best.iter().map(|&i| local.vertices[order[i]]).collect();
    MisResult {
        set,
        exact: !search.exhausted,
        nodes: search.nodes,
    }
}

/// Independent set built by repeatedly taking the candidate with the fewest conflicts.
fn min_degree_greedy(compatible: &[BitSet], k: usize) -> Vec<usize> {
    let mut cand = BitSet::new(k);
    for i in 0..k {
        cand.set(i);
    }
    let mut out = Vec::new();
    while !cand.is_empty() {
        // the vertex keeping the most candidates alive
        let v = cand
            .iter()
            .max_by_key(|&v| {
                let kept: u32 = compatible[v].words.iter().zip(&cand.words).map(|(a, b)| (a & b).count_ones()).sum();
                (kept, std::cmp::Reverse(v))
            })
            .unwrap();
        out.push(v);
        for (c, m) in cand.words.iter_mut().zip(&compatible[v].words) {
            *c &= m;
        }
    }
    out
}

struct CliqueSearch<'a> {
    compatible: &'a [BitSet],
    best: Vec<usize>,
    current: Vec<usize>,
    nodes: u64,
    max_nodes: u64,
    exhausted: bool,
}

impl CliqueSearch<'_> {
    fn expand(&mut self, mut cand: BitSet) {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            self.exhausted = true;
            return;
        }
        let (verts, colors) = self.color_sort(&cand);
        for idx in (0..verts.len()).rev() {
            if self.exhausted || self.current.len() + colors[idx] as usize <= self.best.len() {
                return;
            }
            let v = verts[idx];
            self.current.push(v);
            let mut next = cand.clone();
            for (n, m) in next.words.iter_mut().zip(&self.compatible[v].words) {
                *n &= m;
            }
            if next.is_empty() {
                if self.current.len() > self.best.len() {
                    self.best = self.current.clone();
                }
            } else {
                self.expand(next);
            }
            self.current.pop();
            cand.clear(v);
        }
    }

    /// Sequential greedy colouring of `cand` in the compatibility graph. Each
    /// colour class is a set of pairwise conflicting vertices, so a clique
    /// uses at most one vertex per colour.
    fn color_sort(&self, cand: &BitSet) -> (Vec<usize>, Vec<u32>) {
        let mut uncolored = cand.clone();
        let mut verts = Vec::new();
        let mut colors = Vec::new();
        let mut color = 0u32;
        while !uncolored.is_empty() {
            color += 1;
            let mut q = uncolored.clone();
            while let Some(v) = q.first() {
                uncolored.clear(v);
                q.clear(v);
                for (qw, m) in q.words.iter_mut().zip(&self.compatible[v].words) {
                    *qw &= !m;
                }
                verts.push(v);
                colors.push(color);
            }
        }
        (verts, colors)
    }
}
