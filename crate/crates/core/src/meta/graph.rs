//! Response graphs and their sink strongly-connected components.

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{GameError, Result};
use crate::game::{PayoffMatrix, Player};

/// Antisymmetry tolerance for treating a table as a single-population game.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    /// A strategy of the shared population.
    Strategy(usize),
    /// A joint pure profile `(row, column)`.
    Profile(usize, usize),
}

/// Directed graph of strictly improving unilateral deviations.
#[derive(Clone, Debug)]
pub struct ResponseGraph {
    pub nodes: Vec<Node>,
    /// Out-neighbours per node, ascending.
    pub out: Vec<Vec<usize>>,
}

impl ResponseGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(a, outs)| outs.iter().map(move |&b| (a, b)))
            .collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.out[a].binary_search(&b).is_ok()
    }
}

/// `true` when the table can be read as one population playing itself.
pub fn is_single_population(m: &PayoffMatrix) -> bool {
    m.is_antisymmetric(SYMMETRY_TOL)
}

/// In single-population mode the nodes are strategies with an edge `i -> j`
/// iff `M(j, i) > M(i, i)`; otherwise the nodes are joint profiles with an
/// edge whenever one player strictly gains by deviating alone.
pub fn build_response_graph(m: &PayoffMatrix, symmetric_single_population: bool) -> Result<ResponseGraph> {
    if symmetric_single_population {
        if !m.is_square() {
            return Err(GameError::Shape(format!(
                "single-population graph needs a square table, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !is_single_population(m) {
            return Err(GameError::Shape(
                "single-population graph needs an antisymmetric zero-sum table".into(),
            ));
        }
        let n = m.rows();
        let out = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && m.get(j, i) > m.get(i, i)).collect())
            .collect();
        return Ok(ResponseGraph {
            nodes: (0..n).map(Node::Strategy).collect(),
            out,
        });
    }
    let (r, c) = (m.rows(), m.cols());
    let mut nodes = Vec::with_capacity(r * c);
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            nodes.push(Node::Profile(i, j));
            let mut targets = Vec::new();
            for i2 in 0..r {
                if i2 != i && m.payoff(Player::One, i2, j) > m.payoff(Player::One, i, j) {
                    targets.push(i2 * c + j);
                }
            }
            for j2 in 0..c {
                if j2 != j && m.payoff(Player::Two, i, j2) > m.payoff(Player::Two, i, j) {
                    targets.push(i * c + j2);
                }
            }
            targets.sort_unstable();
            out.push(targets);
        }
    }
    Ok(ResponseGraph { nodes, out })
}

fn normalise(mut comps: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for c in comps.iter_mut() {
        c.sort_unstable();
    }
    comps.sort();
    comps
}

/// Sink SCCs by Tarjan's algorithm.
pub fn sink_components(graph: &ResponseGraph) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::with_capacity(graph.len(), 0);
    let idx: Vec<NodeIndex> = (0..graph.len()).map(|_| g.add_node(())).collect();
    for (a, b) in graph.edges() {
        g.add_edge(idx[a], idx[b], ());
    }
    let mut comp_of = vec![usize::MAX; graph.len()];
    let comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| c.into_iter().map(|n| n.index()).collect())
        .collect();
    for (k, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = k;
        }
    }
    let sinks = comps
        .iter()
        .enumerate()
        .filter(|(k, c)| c.iter().all(|&v| graph.out[v].iter().all(|&w| comp_of[w] == *k)))
        .map(|(_, c)| c.clone())
        .collect();
    normalise(sinks)
}

/// Sink SCCs from explicit pairwise reachability: `i` and `j` share a
/// component iff each reaches the other. Quadratic memory; meant as a
/// reference for small games.
pub fn find_sscc_bruteforce(m: &PayoffMatrix) -> Vec<Vec<usize>> {
    let graph = build_response_graph(m, is_single_population(m)).expect("mode chosen from the table");
    sscc_by_reachability(&graph)
}

pub(crate) fn sscc_by_reachability(graph: &ResponseGraph) -> Vec<Vec<usize>> {
    let n = graph.len();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &w in &graph.out[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            seen
        })
        .collect();
    let mut assigned = vec![false; n];
    let mut sinks = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &comp {
            assigned[j] = true;
        }
        // a sink reaches nothing outside itself
        if (0..n).all(|j| !reach[i][j] || comp.contains(&j)) {
            sinks.push(comp);
        }
    }
    normalise(sinks)
}

/// Strategy indices appearing in any sink component. Joint-profile nodes
/// contribute their row strategy.
pub fn sscc_members(m: &PayoffMatrix) -> Vec<usize> {
    let single = is_single_population(m);
    let graph = build_response_graph(m, single).expect("mode chosen from the table");
    let mut members: Vec<usize> = sscc_by_reachability(&graph)
        .into_iter()
        .flatten()
        .map(|v| match graph.nodes[v] {
            Node::Strategy(s) => s,
            Node::Profile(r, _) => r,
        })
        .collect();
    members.sort_unstable();
    members.dedup();
    members
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{make_random_zero_sum, make_rps, make_rpsx};

    fn dominant() -> PayoffMatrix {
        PayoffMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn rps_is_a_three_cycle() {
        let g = build_response_graph(&make_rps(), true).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2), (2, 0)]);
        assert_eq!(sink_components(&g), vec![vec![0, 1, 2]]);
        assert_eq!(find_sscc_bruteforce(&make_rps()), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn dominated_strategy_has_single_edge() {
        let g = build_response_graph(&dominant(), true).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
        assert_eq!(find_sscc_bruteforce(&dominant()), vec![vec![1]]);
    }

    #[test]
    fn ties_create_no_edges() {
        let zero = PayoffMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(build_response_graph(&zero, true).unwrap().edges().is_empty());
        assert!(build_response_graph(&zero, false).unwrap().edges().is_empty());
    }

    #[test]
    fn rpsx_sink_is_x() {
        assert_eq!(find_sscc_bruteforce(&make_rpsx()), vec![vec![3]]);
        assert_eq!(sscc_members(&make_rpsx()), vec![3]);
    }

    #[test]
    fn single_population_needs_square_antisymmetric() {
        let rect = PayoffMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(build_response_graph(&rect, true), Err(GameError::Shape(_))));
        let sym = PayoffMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(build_response_graph(&sym, true).is_err());
    }

    #[test]
    fn two_population_graph_of_rps() {
        let g = build_response_graph(&make_rps(), false).unwrap();
        assert_eq!(g.len(), 9);
        // from (R, R) player one moves to P, player two to P
        assert!(g.has_edge(0, 3));
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(0, 6));
        assert_eq!(sink_components(&g), sscc_by_reachability(&g));
    }

    #[test]
    fn tarjan_agrees_with_reachability() {
        for seed in 0..40 {
            let m = make_random_zero_sum(2 + seed as usize % 9, seed).unwrap();
            for single in [true, false] {
                let g = build_response_graph(&m, single).unwrap();
                assert_eq!(sink_components(&g), sscc_by_reachability(&g));
            }
        }
    }
}
