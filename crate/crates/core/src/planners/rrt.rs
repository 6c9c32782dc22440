use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EdgeValidator, Plan, PlanError, PlanMeta, PlannerKind, PlanningProblem};
use crate::chance::Segment;
use crate::geometry::Pose2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub state: Pose2,
    pub parent: Option<usize>,
    /// Path length from the root.
    pub cost: f64,
    /// Edge from the parent.
    pub edge: Option<Segment>,
    pub c_hat: Option<f64>,
    pub children: Vec<usize>,
}

/// Search tree rooted at the start state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn new(root: Pose2) -> Self {
        Tree { nodes: vec![Node { state: root, parent: None, cost: 0.0, edge: None, c_hat: None, children: Vec::new() }] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn add(&mut self, parent: usize, state: Pose2, edge: Segment, c_hat: Option<f64>) -> usize {
        let id = self.nodes.len();
        let cost = self.nodes[parent].cost + edge.length();
        self.nodes.push(Node { state, parent: Some(parent), cost, edge: Some(edge), c_hat, children: Vec::new() });
        self.nodes[parent].children.push(id);
        id
    }

    fn rewire(&mut self, node: usize, parent: usize, edge: Segment, c_hat: Option<f64>) {
        let old = self.nodes[node].parent.expect("root is never rewired");
        self.nodes[old].children.retain(|&c| c != node);
        self.nodes[parent].children.push(node);
        let n = &mut self.nodes[node];
        n.parent = Some(parent);
        n.edge = Some(edge);
        n.c_hat = c_hat;
        let mut stack = vec![node];
        while let Some(i) = stack.pop() {
            let base = self.nodes[i].parent.map_or(0.0, |p| self.nodes[p].cost);
            self.nodes[i].cost = base + self.nodes[i].edge.as_ref().map_or(0.0, |e| e.length());
            stack.extend(self.nodes[i].children.iter().copied());
        }
    }

    /// Largest gap between stored costs and costs recomputed from edges.
    pub fn cost_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, n) in self.nodes.iter().enumerate() {
            let mut c = 0.0;
            let mut j = i;
            while let Some(p) = self.nodes[j].parent {
                c += self.nodes[j].edge.as_ref().unwrap().length();
                j = p;
            }
            worst = worst.max((c - n.cost).abs());
        }
        worst
    }

    fn path_to(&self, goal: usize) -> (Vec<Pose2>, Vec<Segment>, Vec<Option<f64>>) {
        let mut states = vec![self.nodes[goal].state];
        let mut segs = Vec::new();
        let mut c_hat = Vec::new();
        let mut i = goal;
        while let Some(p) = self.nodes[i].parent {
            segs.push(self.nodes[i].edge.unwrap());
            c_hat.push(self.nodes[i].c_hat);
            states.push(self.nodes[p].state);
            i = p;
        }
        states.reverse();
        segs.reverse();
        c_hat.reverse();
        (states, segs, c_hat)
    }
}

/// Near-neighbor radius `max(γ (log n / n)^{1/d}, η)`, with
/// `γ = 2 (1 + 1/d)^{1/d} (μ / ζ_d)^{1/d}` from the sampled measure.
pub fn near_radius(problem: &PlanningProblem, n: usize) -> f64 {
    let d = problem.steering.dim() as f64;
    let gamma = problem.options.gamma.unwrap_or_else(|| {
        let (measure, unit_ball) = if d == 2.0 { (problem.bounds.area(), PI) } else { (problem.bounds.area() * 2.0 * PI, 4.0 / 3.0 * PI) };
        2.0 * (1.0 + 1.0 / d).powf(1.0 / d) * (measure / unit_ball).powf(1.0 / d)
    });
    let n = n.max(2) as f64;
    (gamma * (n.ln() / n).powf(1.0 / d)).max(problem.steering.eta())
}

fn planar(a: &Pose2, b: &Pose2) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

fn nearest(problem: &PlanningProblem, tree: &Tree, q: &Pose2) -> usize {
    let mut order: Vec<(f64, usize)> = tree.nodes.iter().enumerate().map(|(i, n)| (planar(&n.state, q), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best = (f64::INFINITY, 0);
    for (lower, i) in order {
        // steering cost is never below planar distance
        if lower > best.0 {
            break;
        }
        let d = problem.steering.distance(&tree.nodes[i].state, q);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

fn sample<R: Rng + ?Sized>(problem: &PlanningProblem, rng: &mut R) -> Pose2 {
    if rng.random::<f64>() < problem.options.goal_bias {
        problem.goal.center
    } else {
        problem.steering.sample(&problem.bounds, rng)
    }
}

struct Search<'p> {
    problem: &'p PlanningProblem,
    tree: Tree,
    goals: Vec<usize>,
    trace: Vec<(usize, f64)>,
    started: Instant,
}

impl<'p> Search<'p> {
    fn best_goal(&self) -> Option<usize> {
        self.goals.iter().copied().min_by(|&a, &b| self.tree.nodes[a].cost.total_cmp(&self.tree.nodes[b].cost).then(a.cmp(&b)))
    }

    fn out_of_time(&self) -> bool {
        self.problem.options.time_limit.is_some_and(|t| self.started.elapsed().as_secs_f64() >= t)
    }

    fn note_best(&mut self, iteration: usize) {
        if let Some(g) = self.best_goal() {
            let c = self.tree.nodes[g].cost;
            match self.trace.last() {
                Some(&(_, prev)) if c == prev => {}
                Some(&(_, prev)) => {
                    assert!(c < prev, "best cost increased from {prev} to {c}");
                    self.trace.push((iteration, c));
                }
                None => self.trace.push((iteration, c)),
            }
        }
    }

    fn finish(self, kind: PlannerKind, iterations: usize, validator: &dyn EdgeValidator) -> (Tree, Result<Plan, PlanError>) {
        let (calls, hits) = validator.counters();
        let nodes = self.tree.len();
        let result = match self.best_goal() {
            Some(g) => {
                let (states, segments, edge_c_hat) = self.tree.path_to(g);
                let length = segments.iter().map(|s| s.length()).sum();
                Ok(Plan {
                    states,
                    segments,
                    edge_c_hat,
                    length,
                    meta: PlanMeta {
                        planner: match kind {
                            PlannerKind::Rrt => "rrt".into(),
                            PlannerKind::RrtStar => "rrt*".into(),
                        },
                        iterations,
                        nodes,
                        connect_calls: calls,
                        cache_hits: hits,
                        goal_bias: self.problem.options.goal_bias,
                        wall_time: self.started.elapsed().as_secs_f64(),
                        best_cost_trace: self.trace,
                    },
                })
            }
            None => Err(PlanError::Failure { iterations, nodes, reason: "goal region not reached".into() }),
        };
        (self.tree, result)
    }
}

fn validate(problem: &PlanningProblem, validator: &mut dyn EdgeValidator) -> Result<(), PlanError> {
    if !(problem.goal.radius > 0.0) {
        return Err(PlanError::Problem("goal region is empty".into()));
    }
    if !(problem.options.goal_bias >= 0.0 && problem.options.goal_bias <= 1.0) {
        return Err(PlanError::Problem("goal bias must lie in [0, 1]".into()));
    }
    if !validator.state_valid(&problem.start) {
        return Err(PlanError::Failure { iterations: 0, nodes: 1, reason: "start state rejected".into() });
    }
    Ok(())
}

/// Grows the tree and returns it with the plan, for callers that inspect
/// the search.
pub fn grow(problem: &PlanningProblem, kind: PlannerKind, validator: &mut dyn EdgeValidator) -> (Tree, Result<Plan, PlanError>) {
    let started = Instant::now();
    let mut search = Search { problem, tree: Tree::new(problem.start), goals: Vec::new(), trace: Vec::new(), started };
    if let Err(e) = validate(problem, validator) {
        return (search.tree, Err(e));
    }
    if problem.goal.contains(&problem.start) {
        search.goals.push(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut iterations = 0;
    while iterations < problem.options.max_iterations && !search.out_of_time() {
        if kind == PlannerKind::Rrt && !search.goals.is_empty() {
            break;
        }
        iterations += 1;
        let target = sample(problem, &mut rng);
        let near_id = nearest(problem, &search.tree, &target);
        let seg = problem.steering.steer(&search.tree.nodes[near_id].state, &target);
        let new_state = seg.end();
        if seg.length() == 0.0 || !validator.state_valid(&new_state) {
            continue;
        }
        let added = match kind {
            PlannerKind::Rrt => {
                let check = validator.edge(&seg);
                check.valid.then(|| search.tree.add(near_id, new_state, seg, check.c_hat))
            }
            PlannerKind::RrtStar => extend_star(&mut search, validator, near_id, seg, new_state),
        };
        if let Some(id) = added {
            if problem.goal.contains(&new_state) {
                search.goals.push(id);
            }
        }
        search.note_best(iterations);
    }
    search.finish(kind, iterations, validator)
}

/// Lazy choose-parent and rewire: candidates are checked in cost order and
/// a rewiring edge is only checked when it would lower the cost.
fn extend_star(
    search: &mut Search,
    validator: &mut dyn EdgeValidator,
    near_id: usize,
    seg: Segment,
    new_state: Pose2,
) -> Option<usize> {
    let problem = search.problem;
    let tree = &search.tree;
    let r = near_radius(problem, tree.len() + 1);
    let near: Vec<usize> = (0..tree.len()).filter(|&i| i != near_id && planar(&tree.nodes[i].state, &new_state) <= r).collect();
    let mut candidates: Vec<(f64, usize, Segment)> = vec![(tree.nodes[near_id].cost + seg.length(), near_id, seg)];
    for &i in &near {
        let s = problem.steering.connect(&tree.nodes[i].state, &new_state);
        if s.length() <= r {
            candidates.push((tree.nodes[i].cost + s.length(), i, s));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (parent, edge, c_hat) = candidates.into_iter().find_map(|(_, i, s)| {
        let check = validator.edge(&s);
        check.valid.then_some((i, s, check.c_hat))
    })?;
    let id = search.tree.add(parent, new_state, edge, c_hat);
    let new_cost = search.tree.nodes[id].cost;
    for j in near.into_iter().chain(std::iter::once(near_id)) {
        if j == parent || search.tree.nodes[j].parent.is_none() {
            continue;
        }
        let s = problem.steering.connect(&new_state, &search.tree.nodes[j].state);
        if s.length() > r || new_cost + s.length() >= search.tree.nodes[j].cost - 1e-12 {
            continue;
        }
        let check = validator.edge(&s);
        if check.valid {
            search.tree.rewire(j, id, s, check.c_hat);
        }
    }
    Some(id)
}

/// Returns on the first node inside the goal region.
pub fn rrt(problem: &PlanningProblem, validator: &mut dyn EdgeValidator) -> Result<Plan, PlanError> {
    grow(problem, PlannerKind::Rrt, validator).1
}

/// Runs the whole budget and returns the cheapest goal node's path.
pub fn rrt_star(problem: &PlanningProblem, validator: &mut dyn EdgeValidator) -> Result<Plan, PlanError> {
    grow(problem, PlannerKind::RrtStar, validator).1
}
