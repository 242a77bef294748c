//! Support-graph search.
//!
//! A graph picks up to `max_tuples` candidate tuples and a set of alignment
//! edges into them. It is feasible when every picked tuple has an edge from a
//! question term, at least one edge leaves an option term, and no term is
//! used by more than one edge. Its objective is the summed edge weight minus
//! `penalty` per tuple. The empty graph (objective 0) is always available.
//!
//! For a fixed tuple subset the best edge choice is a small assignment
//! problem, solved exactly by dynamic programming over terms with a bitmask
//! of satisfied constraints. Subsets are searched by depth-first branch and
//! bound up to `exact_cap` candidates, and by a deterministic beam above it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::candidates::{AlignmentEdge, Side, SupportCandidate, TermRef};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub max_tuples: usize,
    pub penalty: f64,
    pub exact_cap: usize,
    pub beam_width: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { max_tuples: 3, penalty: 0.1, exact_cap: 20, beam_width: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedEdge {
    /// Index into the candidate list.
    pub candidate: usize,
    pub edge: AlignmentEdge,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SupportGraph {
    /// Candidate indices, ascending.
    pub tuples: Vec<usize>,
    pub edges: Vec<SelectedEdge>,
    pub objective: f64,
}

impl SupportGraph {
    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Best edge from each term into each tuple of a subset.
struct SubsetEdges {
    /// term -> [(position in subset, candidate index, edge)]
    by_term: BTreeMap<TermRef, Vec<(usize, usize, AlignmentEdge)>>,
}

impl SubsetEdges {
    fn new(cands: &[SupportCandidate], subset: &[usize]) -> Self {
        let mut by_term: BTreeMap<TermRef, Vec<(usize, usize, AlignmentEdge)>> = BTreeMap::new();
        for (pos, &ci) in subset.iter().enumerate() {
            let mut best: BTreeMap<TermRef, AlignmentEdge> = BTreeMap::new();
            for e in &cands[ci].edges {
                match best.get(&e.term) {
                    Some(b) if b.weight >= e.weight => {}
                    _ => {
                        best.insert(e.term, *e);
                    }
                }
            }
            for (term, e) in best {
                by_term.entry(term).or_default().push((pos, ci, e));
            }
        }
        Self { by_term }
    }
}

/// Exact best edge assignment for a fixed, non-empty tuple subset, or `None`
/// when the subset cannot be made feasible.
fn solve_subset(cands: &[SupportCandidate], subset: &[usize], penalty: f64) -> Option<SupportGraph> {
    let s = subset.len();
    let option_bit = 1usize << s;
    let full = (option_bit << 1) - 1;
    let edges = SubsetEdges::new(cands, subset);
    let terms: Vec<_> = edges.by_term.iter().collect();

    // dp[mask] = best weight; choice[t][mask] = (previous mask, chosen option index)
    let mut dp = vec![f64::NEG_INFINITY; full + 1];
    dp[0] = 0.0;
    let mut back: Vec<Vec<(usize, Option<usize>)>> = Vec::with_capacity(terms.len());
    for (term, opts) in &terms {
        let mut next = dp.clone();
        let mut choice: Vec<(usize, Option<usize>)> = (0..=full).map(|m| (m, None)).collect();
        for (mask, &base) in dp.iter().enumerate() {
            if base == f64::NEG_INFINITY {
                continue;
            }
            for (k, (pos, _, e)) in opts.iter().enumerate() {
                let bit = match term.side {
                    Side::Question => 1usize << pos,
                    Side::Option => option_bit,
                };
                let m2 = mask | bit;
                let v = base + e.weight;
                if v > next[m2] + EPS {
                    next[m2] = v;
                    choice[m2] = (mask, Some(k));
                }
            }
        }
        back.push(choice);
        dp = next;
    }
    if dp[full] == f64::NEG_INFINITY {
        return None;
    }
    let mut selected = Vec::new();
    let mut mask = full;
    for (ti, choice) in back.iter().enumerate().rev() {
        let (prev, k) = choice[mask];
        if let Some(k) = k {
            let (_, ci, e) = terms[ti].1[k];
            selected.push(SelectedEdge { candidate: ci, edge: e });
        }
        mask = prev;
    }
    selected.reverse();
    let weight: f64 = selected.iter().map(|e| e.edge.weight).sum();
    Some(SupportGraph { tuples: subset.to_vec(), edges: selected, objective: weight - penalty * s as f64 })
}

fn best_per_term(cands: &[SupportCandidate], idx: &[usize]) -> BTreeMap<TermRef, f64> {
    let mut best: BTreeMap<TermRef, f64> = BTreeMap::new();
    for &i in idx {
        for e in &cands[i].edges {
            let slot = best.entry(e.term).or_insert(0.0);
            *slot = slot.max(e.weight);
        }
    }
    best
}

struct Search<'a> {
    cands: &'a [SupportCandidate],
    cfg: GraphConfig,
    /// suffix[i][term]: best weight of `term` over candidates i..
    suffix: Vec<BTreeMap<TermRef, f64>>,
    best: SupportGraph,
}

impl Search<'_> {
    fn bound(&self, current: &BTreeMap<TermRef, f64>, next: usize, chosen: usize) -> f64 {
        let tail = &self.suffix[next];
        let mut total = 0.0;
        for (term, w) in tail {
            total += w.max(current.get(term).copied().unwrap_or(0.0));
        }
        for (term, w) in current {
            if !tail.contains_key(term) {
                total += w;
            }
        }
        total - self.cfg.penalty * chosen.max(1) as f64
    }

    fn dfs(&mut self, next: usize, subset: &mut Vec<usize>) {
        if !subset.is_empty() {
            if let Some(g) = solve_subset(self.cands, subset, self.cfg.penalty) {
                if g.objective > self.best.objective + EPS {
                    self.best = g;
                }
            }
        }
        if subset.len() == self.cfg.max_tuples {
            return;
        }
        let current = best_per_term(self.cands, subset);
        for i in next..self.cands.len() {
            let mut with_i = current.clone();
            for e in &self.cands[i].edges {
                let slot = with_i.entry(e.term).or_insert(0.0);
                *slot = slot.max(e.weight);
            }
            if self.bound(&with_i, i + 1, subset.len() + 1) <= self.best.objective + EPS {
                continue;
            }
            subset.push(i);
            self.dfs(i + 1, subset);
            subset.pop();
        }
    }
}

fn relaxed_value(cands: &[SupportCandidate], subset: &[usize], penalty: f64) -> f64 {
    best_per_term(cands, subset).values().sum::<f64>() - penalty * subset.len() as f64
}

fn beam_search(cands: &[SupportCandidate], cfg: GraphConfig) -> SupportGraph {
    let mut best = SupportGraph::default();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..cfg.max_tuples {
        let mut grown: Vec<(f64, Vec<usize>)> = Vec::new();
        for subset in &frontier {
            let start = subset.last().map_or(0, |&l| l + 1);
            for i in start..cands.len() {
                let mut s = subset.clone();
                s.push(i);
                if let Some(g) = solve_subset(cands, &s, cfg.penalty) {
                    if g.objective > best.objective + EPS {
                        best = g;
                    }
                }
                grown.push((relaxed_value(cands, &s, cfg.penalty), s));
            }
        }
        grown.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        grown.truncate(cfg.beam_width);
        frontier = grown.into_iter().map(|(_, s)| s).collect();
        if frontier.is_empty() {
            break;
        }
    }
    best
}

/// Highest-objective feasible support graph; exact up to `cfg.exact_cap`
/// candidates.
pub fn optimize_support_graph(cands: &[SupportCandidate], cfg: GraphConfig) -> SupportGraph {
    if cands.is_empty() || cfg.max_tuples == 0 {
        return SupportGraph::default();
    }
    if cands.len() > cfg.exact_cap {
        return beam_search(cands, cfg);
    }
    let mut suffix = vec![BTreeMap::new(); cands.len() + 1];
    for i in (0..cands.len()).rev() {
        let mut m = suffix[i + 1].clone();
        for e in &cands[i].edges {
            let slot = m.entry(e.term).or_insert(0.0);
            *slot = f64::max(*slot, e.weight);
        }
        suffix[i] = m;
    }
    let mut search = Search { cands, cfg, suffix, best: SupportGraph::default() };
    search.dfs(0, &mut Vec::new());
    search.best
}

/// Checks every structural constraint of a returned graph.
pub fn validate_support_graph(
    graph: &SupportGraph,
    cands: &[SupportCandidate],
    cfg: GraphConfig,
) -> Result<(), String> {
    if graph.tuples.len() > cfg.max_tuples {
        return Err(format!("{} tuples exceeds max {}", graph.tuples.len(), cfg.max_tuples));
    }
    if graph.objective < 0.0 {
        return Err(format!("negative objective {}", graph.objective));
    }
    if graph.is_empty() {
        return if graph.edges.is_empty() && graph.objective == 0.0 {
            Ok(())
        } else {
            Err("empty graph must have no edges and objective 0".into())
        };
    }
    let mut used = std::collections::BTreeSet::new();
    let mut option_touched = false;
    let mut q_edges = vec![0usize; graph.tuples.len()];
    for se in &graph.edges {
        let pos = graph
            .tuples
            .iter()
            .position(|&t| t == se.candidate)
            .ok_or_else(|| format!("edge into unselected candidate {}", se.candidate))?;
        if !cands[se.candidate].edges.contains(&se.edge) {
            return Err(format!("edge {:?} is not a candidate edge", se.edge));
        }
        if !used.insert(se.edge.term) {
            return Err(format!("term {:?} used twice", se.edge.term));
        }
        match se.edge.term.side {
            Side::Question => q_edges[pos] += 1,
            Side::Option => option_touched = true,
        }
    }
    if let Some(pos) = q_edges.iter().position(|&n| n == 0) {
        return Err(format!("tuple {} has no question edge", graph.tuples[pos]));
    }
    if !option_touched {
        return Err("option not connected".into());
    }
    let expected: f64 =
        graph.edges.iter().map(|e| e.edge.weight).sum::<f64>() - cfg.penalty * graph.tuples.len() as f64;
    if (expected - graph.objective).abs() > 1e-9 {
        return Err(format!("objective {} != edge sum minus penalty {expected}", graph.objective));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuple::extract::{Field, Tuple};

    fn q(i: usize) -> TermRef {
        TermRef { side: Side::Question, index: i }
    }
    fn o(i: usize) -> TermRef {
        TermRef { side: Side::Option, index: i }
    }
    fn cand(sid: u32, edges: &[(TermRef, Field, f64)]) -> SupportCandidate {
        SupportCandidate {
            tuple: Tuple::new("s", "p", &["o"], sid),
            edges: edges.iter().map(|&(term, field, weight)| AlignmentEdge { term, field, weight }).collect(),
        }
    }

    #[test]
    fn no_candidates() {
        let g = optimize_support_graph(&[], GraphConfig::default());
        assert!(g.is_empty());
        assert_eq!(g.objective, 0.0);
    }

    #[test]
    fn single_tuple_hand_value() {
        let cands = vec![cand(0, &[(q(0), Field::Subject, 0.9), (o(0), Field::Object(0), 0.8)])];
        let cfg = GraphConfig::default();
        let g = optimize_support_graph(&cands, cfg);
        assert!((g.objective - 1.6).abs() < 1e-12);
        assert_eq!(g.tuples, vec![0]);
        validate_support_graph(&g, &cands, cfg).unwrap();
    }

    #[test]
    fn option_must_be_reached() {
        let cands = vec![cand(0, &[(q(0), Field::Subject, 1.0), (q(1), Field::Object(0), 1.0)])];
        let g = optimize_support_graph(&cands, GraphConfig::default());
        assert!(g.is_empty());
    }

    #[test]
    fn shared_term_cannot_cover_two_tuples() {
        // Tuple 1 can only be reached through q0, which tuple 0 also needs.
        let cands = vec![
            cand(0, &[(q(0), Field::Subject, 1.0), (o(0), Field::Object(0), 1.0)]),
            cand(1, &[(q(0), Field::Subject, 1.0), (o(1), Field::Object(0), 1.0)]),
        ];
        let cfg = GraphConfig { penalty: 0.0, ..GraphConfig::default() };
        let g = optimize_support_graph(&cands, cfg);
        validate_support_graph(&g, &cands, cfg).unwrap();
        assert_eq!(g.tuples.len(), 1);
        assert!((g.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn chain_through_two_tuples() {
        let cands = vec![
            cand(0, &[(q(0), Field::Subject, 1.0), (q(1), Field::Object(0), 0.7)]),
            cand(1, &[(q(2), Field::Subject, 1.0), (o(0), Field::Object(0), 1.0)]),
        ];
        let cfg = GraphConfig::default();
        let g = optimize_support_graph(&cands, cfg);
        validate_support_graph(&g, &cands, cfg).unwrap();
        assert_eq!(g.tuples, vec![0, 1]);
        assert!((g.objective - (3.7 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn beam_handles_many_candidates() {
        let cands: Vec<_> = (0..30)
            .map(|i| {
                cand(i, &[(q(i as usize % 5), Field::Subject, 0.7), (o(0), Field::Object(0), 0.5 + i as f64 / 100.0)])
            })
            .collect();
        let cfg = GraphConfig::default();
        let g = optimize_support_graph(&cands, cfg);
        validate_support_graph(&g, &cands, cfg).unwrap();
        assert!(g.objective > 0.0);
    }

    #[test]
    fn validator_catches_reused_term() {
        let cands =
            vec![cand(0, &[(q(0), Field::Subject, 1.0), (q(0), Field::Object(0), 1.0), (o(0), Field::Predicate, 1.0)])];
        let bad = SupportGraph {
            tuples: vec![0],
            edges: cands[0].edges.iter().map(|&edge| SelectedEdge { candidate: 0, edge }).collect(),
            objective: 2.9,
        };
        assert!(validate_support_graph(&bad, &cands, GraphConfig::default()).is_err());
    }
}
