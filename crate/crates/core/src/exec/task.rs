//! Task descriptors: what a candidate function looks like, which backbone
//! consumes it, and how training instances are drawn.

use crate::backbones::{AcoParams, ArtifactKind, GlsParams, GraspParams};
use crate::instances::{
    gen_dlp, gen_jssp, gen_op, gen_qap, gen_sco, gen_tsp, gen_vrp, DlpVariant, InstanceError, ProblemInstance,
    ScoVariant, TspDistribution, VrpVariant,
};
use crate::rng::{derive_indexed, rng_from_seed};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The program maps an instance to a numeric artifact; a native
    /// backbone computes the objective.
    Artifact,
    /// The program is a step selector run inside the shipped construction
    /// loop, which reports objectives directly.
    Rollout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Backbone {
    Constructive,
    Aco {
        #[serde(default)]
        params: AcoParams,
    },
    Gls {
        #[serde(default)]
        params: GlsParams,
    },
    Grasp {
        #[serde(default)]
        params: GraspParams,
    },
}

impl Backbone {
    pub fn mode(&self) -> Mode {
        match self {
            Backbone::Constructive => Mode::Rollout,
            _ => Mode::Artifact,
        }
    }
}

/// How to draw one training instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceRecipe {
    Tsp { n: usize, distribution: TspDistribution },
    /// `n` counts the depot.
    Vrp { n: usize, variant: VrpVariant, capacity: f64 },
    /// `n` counts the depot.
    Op { n: usize },
    Jssp { jobs: usize, machines: usize },
    Qap { n: usize },
    Dlp { n: usize, variant: DlpVariant, p: Option<usize> },
    Sco { variant: ScoVariant, n: usize },
}

impl InstanceRecipe {
    /// `count` instances; instance `i` uses the seed `derive_indexed(seed, i)`
    /// so sets are prefix-stable.
    pub fn generate(&self, count: usize, seed: u64) -> Result<Vec<ProblemInstance>, InstanceError> {
        (0..count)
            .map(|i| {
                let rng = &mut rng_from_seed(derive_indexed(seed, i as u64));
                Ok(match *self {
                    InstanceRecipe::Tsp { n, distribution } => gen_tsp(n, distribution, rng)?.into(),
                    InstanceRecipe::Vrp { n, variant, capacity } => gen_vrp(n, variant, capacity, rng)?.into(),
                    InstanceRecipe::Op { n } => gen_op(n, rng)?.into(),
                    InstanceRecipe::Jssp { jobs, machines } => gen_jssp(jobs, machines, rng)?.into(),
                    InstanceRecipe::Qap { n } => gen_qap(n, rng)?.into(),
                    InstanceRecipe::Dlp { n, variant, p } => gen_dlp(n, variant, p, rng)?.into(),
                    InstanceRecipe::Sco { variant, n } => gen_sco(variant, n, rng)?.into(),
                })
            })
            .collect()
    }

    /// Same recipe at a different size (nodes, jobs or items).
    pub fn resized(&self, size: usize) -> Self {
        let mut r = self.clone();
        match &mut r {
            InstanceRecipe::Tsp { n, .. }
            | InstanceRecipe::Vrp { n, .. }
            | InstanceRecipe::Op { n }
            | InstanceRecipe::Qap { n }
            | InstanceRecipe::Dlp { n, .. }
            | InstanceRecipe::Sco { n, .. } => *n = size,
            InstanceRecipe::Jssp { jobs, .. } => *jobs = size,
        }
        r
    }
}

/// Everything a search engine and an evaluator need to know about the
/// function being designed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub prob_name: String,
    pub func_name: String,
    pub func_sign: String,
    pub func_desc: String,
    pub objective_desc: String,
    /// Short pointer at signals worth exploiting, used by tree prompts.
    pub hint: String,
    pub seed_code: String,
    pub backbone: Backbone,
    pub recipe: InstanceRecipe,
    pub n_instances: usize,
}

impl Task {
    pub fn mode(&self) -> Mode {
        self.backbone.mode()
    }

    /// Artifact kind expected in artifact mode.
    pub fn artifact_kind(&self) -> Option<ArtifactKind> {
        match (&self.backbone, &self.recipe) {
            (Backbone::Aco { .. }, _) => Some(ArtifactKind::EdgeMatrix),
            (Backbone::Gls { .. }, _) => Some(ArtifactKind::GuideMatrix),
            (Backbone::Grasp { .. }, InstanceRecipe::Dlp { variant: DlpVariant::Dispersion, .. }) => {
                Some(ArtifactKind::GuideMatrix)
            }
            (Backbone::Grasp { .. }, _) => Some(ArtifactKind::NodeScores),
            (Backbone::Constructive, _) => None,
        }
    }

    pub fn training_instances(&self, seed: u64) -> Result<Vec<ProblemInstance>, InstanceError> {
        self.recipe.generate(self.n_instances, seed)
    }

    /// A registered task by id; see [`TASK_IDS`].
    pub fn builtin(id: &str) -> Option<Task> {
        let spec = SPECS.iter().find(|s| s.id == id)?;
        Some(spec.build())
    }
}

struct Spec {
    id: &'static str,
    prob_name: &'static str,
    func_name: &'static str,
    func_sign: &'static str,
    func_desc: &'static str,
    objective_desc: &'static str,
    hint: &'static str,
    seed: &'static str,
    backbone: fn() -> Backbone,
    recipe: InstanceRecipe,
    n_instances: usize,
}

impl Spec {
    fn build(&self) -> Task {
        Task {
            id: self.id.into(),
            prob_name: self.prob_name.into(),
            func_name: self.func_name.into(),
            func_sign: self.func_sign.into(),
            func_desc: self.func_desc.into(),
            objective_desc: self.objective_desc.into(),
            hint: self.hint.into(),
            seed_code: self.seed.into(),
            backbone: (self.backbone)(),
            recipe: self.recipe.clone(),
            n_instances: self.n_instances,
        }
    }
}

macro_rules! seed {
    ($id:literal) => {
        include_str!(concat!("../../assets/seeds/", $id, ".py"))
    };
}

const MIN_LENGTH: &str = "Minimize the mean total travel length over the training instances.";
const SCO_OBJECTIVE: &str =
    "Maximize the mean cumulative reward; the score is its negation, so lower is better.";

fn aco() -> Backbone {
    Backbone::Aco { params: AcoParams::default() }
}

fn grasp() -> Backbone {
    Backbone::Grasp { params: GraspParams::default() }
}

fn vrp_train(variant: VrpVariant) -> InstanceRecipe {
    InstanceRecipe::Vrp { n: 51, variant, capacity: 50.0 }
}

static SPECS: std::sync::LazyLock<Vec<Spec>> = std::sync::LazyLock::new(|| {
    vec![
        Spec {
            id: "tsp_constructive",
            prob_name: "TSP",
            func_name: "select_next_city",
            func_sign: "def select_next_city(current: int, start: int, unvisited: set, dist_mat: np.ndarray) -> int",
            func_desc: "Given the current city, the start city, the set of unvisited cities and the distance matrix, return the next city to visit. The tour is built from city 0 and closed at the end.",
            objective_desc: MIN_LENGTH,
            hint: "look-ahead beyond the nearest neighbor, distance to the start city, and how isolated the remaining cities are",
            seed: seed!("tsp_constructive"),
            backbone: || Backbone::Constructive,
            recipe: InstanceRecipe::Tsp { n: 50, distribution: TspDistribution::Uniform },
            n_instances: 5,
        },
        Spec {
            id: "cvrp_constructive",
            prob_name: "CVRP",
            func_name: "select_next_customer",
            func_sign: "def select_next_customer(current: int, depot: int, feasible_customers: list[int], dist_mat: np.ndarray, demands: np.ndarray, remaining_capacity: float, vehicle_capacity: float) -> int",
            func_desc: "Given the current node and the customers that still fit in the vehicle, return the next customer, or the depot to close the route early. The vehicle returns to the depot automatically when nothing fits.",
            objective_desc: MIN_LENGTH,
            hint: "how well a customer's demand fills the remaining capacity and how far it pulls the route from the depot",
            seed: seed!("cvrp_constructive"),
            backbone: || Backbone::Constructive,
            recipe: vrp_train(VrpVariant::Capacitated),
            n_instances: 5,
        },
        Spec {
            id: "op_constructive",
            prob_name: "OP",
            func_name: "select_next_node",
            func_sign: "def select_next_node(current: int, depot: int, feasible_nodes: list[int], dist_mat: np.ndarray, prizes: np.ndarray, remaining_budget: float) -> int",
            func_desc: "Given the current node and the nodes that can still be visited with a return to the depot inside the budget, return the next node, or the depot to stop.",
            objective_desc: "Maximize the mean collected prize; the score is its negation, so lower is better.",
            hint: "prize density around a candidate and how much budget the return trip leaves",
            seed: seed!("op_constructive"),
            backbone: || Backbone::Constructive,
            recipe: InstanceRecipe::Op { n: 80 },
            n_instances: 5,
        },
        Spec {
            id: "jssp_constructive",
            prob_name: "JSSP",
            func_name: "select_next_operation",
            func_sign: "def select_next_operation(ready_operations: list[tuple[int, int]], processing_times: np.ndarray, machine_assignments: np.ndarray, machine_available: np.ndarray, job_available: np.ndarray) -> tuple[int, int]",
            func_desc: "Given the ready (job, operation) pairs and the times at which machines and jobs become free, return the operation to dispatch next. It starts as soon as both its job and its machine are free.",
            objective_desc: "Minimize the mean makespan over the training instances.",
            hint: "remaining work per job, machine idle time, and the earliest feasible start of each ready operation",
            seed: seed!("jssp_constructive"),
            backbone: || Backbone::Constructive,
            recipe: InstanceRecipe::Jssp { jobs: 15, machines: 10 },
            n_instances: 5,
        },
        Spec {
            id: "qap_constructive",
            prob_name: "QAP",
            func_name: "select_next_assignment",
            func_sign: "def select_next_assignment(unassigned_facilities: list[int], unassigned_locations: list[int], flow_mat: np.ndarray, dist_mat: np.ndarray, current_assignment: dict) -> tuple[int, int]",
            func_desc: "Given the unassigned facilities and locations and the partial assignment (facility to location), return the next (facility, location) pair.",
            objective_desc: "Minimize the mean total flow times distance cost over the training instances.",
            hint: "flow concentration between facilities and centrality of the free locations",
            seed: seed!("qap_constructive"),
            backbone: || Backbone::Constructive,
            recipe: InstanceRecipe::Qap { n: 15 },
            n_instances: 5,
        },
        Spec {
            id: "cts_constructive",
            prob_name: "CTS",
            func_name: "select_next_talk",
            func_sign: "def select_next_talk(available_talks: list[int], qualities: np.ndarray, topics: np.ndarray, previous_topic: np.ndarray) -> int",
            func_desc: "Given the talks not yet scheduled, their qualities and unit topic embeddings, and the previous talk's embedding (zeros at the start), return the next talk. Consecutive talks with overlapping topics lose reward.",
            objective_desc: SCO_OBJECTIVE,
            hint: "topic diversity over the whole schedule, not only the next slot",
            seed: seed!("cts_constructive"),
            backbone: || Backbone::Constructive,
            recipe: InstanceRecipe::Sco { variant: ScoVariant::Cts, n: 100 },
            n_instances: 5,
        },
        Spec {
            id: "ftr_constructive",
            prob_name: "FTR",
            func_name: "select_next_stop",
            func_sign: "def select_next_stop(locations: np.ndarray, popularities: np.ndarray, steps_since_last_visit: np.ndarray, last_location: int) -> int",
            func_desc: "Given location coordinates, popularities, steps since each location was last visited (inf if never) and the last location (None at the start), return the next stop. Revisits pay off only after the location recovers; travel costs reward.",
            objective_desc: SCO_OBJECTIVE,
            hint: "recovery dynamics and clusters of nearby popular locations",
            seed: seed!("ftr_constructive"),
            backbone: || Backbone::Constructive,
            recipe: InstanceRecipe::Sco { variant: ScoVariant::Ftr, n: 100 },
            n_instances: 5,
        },
        Spec {
            id: "oas_constructive",
            prob_name: "OAS",
            func_name: "select_next_ad",
            func_sign: "def select_next_ad(base_values: np.ndarray, fatigue_rates: np.ndarray, fatigue_levels: np.ndarray, remaining_slots: int) -> int",
            func_desc: "Given base ad values, per-ad fatigue rates, how often each ad was shown so far, and the remaining slots, return the ad to show next. Each showing decays that ad's value geometrically.",
            objective_desc: SCO_OBJECTIVE,
            hint: "the value an ad retains over the remaining slots, not just its next showing",
            seed: seed!("oas_constructive"),
            backbone: || Backbone::Constructive,
            recipe: InstanceRecipe::Sco { variant: ScoVariant::Oas, n: 100 },
            n_instances: 5,
        },
        Spec {
            id: "wpf_constructive",
            prob_name: "WPF",
            func_name: "select_next_order",
            func_sign: "def select_next_order(available_orders: list[int], values: np.ndarray, base_times: np.ndarray, effective_budget: float) -> int",
            func_desc: "Given the orders that still fit, their values and base picking times, and the remaining budget expressed in base-time units at the current fatigue level, return the next order. Picking slows down with every order.",
            objective_desc: SCO_OBJECTIVE,
            hint: "fatigue makes later picks expensive, so ordering matters as well as selection",
            seed: seed!("wpf_constructive"),
            backbone: || Backbone::Constructive,
            recipe: InstanceRecipe::Sco { variant: ScoVariant::Wpf, n: 100 },
            n_instances: 5,
        },
        Spec {
            id: "tsp_aco",
            prob_name: "TSP",
            func_name: "compute_heuristic_matrix",
            func_sign: "def compute_heuristic_matrix(dist_mat: np.ndarray) -> np.ndarray",
            func_desc: "Return a nonnegative n x n desirability matrix. Ants move from i to j with probability proportional to pheromone times this matrix. The diagonal is ignored.",
            objective_desc: MIN_LENGTH,
            hint: "neighborhood rank of each edge, not only its raw length",
            seed: seed!("tsp_aco"),
            backbone: aco,
            recipe: InstanceRecipe::Tsp { n: 50, distribution: TspDistribution::Uniform },
            n_instances: 5,
        },
        Spec {
            id: "cvrp_aco",
            prob_name: "CVRP",
            func_name: "compute_heuristic_matrix",
            func_sign: "def compute_heuristic_matrix(dist_mat: np.ndarray, demands: np.ndarray, vehicle_capacity: float) -> np.ndarray",
            func_desc: "Return a nonnegative n x n desirability matrix with node 0 the depot. Ants only consider customers that fit in the remaining capacity and return to the depot when none do.",
            objective_desc: MIN_LENGTH,
            hint: "demand relative to capacity and savings against separate depot round trips",
            seed: seed!("cvrp_aco"),
            backbone: aco,
            recipe: vrp_train(VrpVariant::Capacitated),
            n_instances: 5,
        },
        Spec {
            id: "ovrp_aco",
            prob_name: "OVRP",
            func_name: "compute_heuristic_matrix",
            func_sign: "def compute_heuristic_matrix(dist_mat: np.ndarray, demands: np.ndarray, vehicle_capacity: float) -> np.ndarray",
            func_desc: "Return a nonnegative n x n desirability matrix with node 0 the depot. Routes are open: vehicles do not drive back to the depot, so the last leg is free.",
            objective_desc: MIN_LENGTH,
            hint: "routes end anywhere, so edges far from the depot are cheaper to end on",
            seed: seed!("ovrp_aco"),
            backbone: aco,
            recipe: vrp_train(VrpVariant::Open),
            n_instances: 5,
        },
        Spec {
            id: "lvrp_aco",
            prob_name: "LVRP",
            func_name: "compute_heuristic_matrix",
            func_sign: "def compute_heuristic_matrix(dist_mat: np.ndarray, demands: np.ndarray, vehicle_capacity: float, max_duration: float) -> np.ndarray",
            func_desc: "Return a nonnegative n x n desirability matrix with node 0 the depot. Every route, including the return leg, must stay within max_duration as well as the capacity.",
            objective_desc: MIN_LENGTH,
            hint: "distance back to the depot as the duration budget runs out",
            seed: seed!("lvrp_aco"),
            backbone: aco,
            recipe: vrp_train(VrpVariant::DurationLimited),
            n_instances: 5,
        },
        Spec {
            id: "tsp_gls",
            prob_name: "TSP",
            func_name: "compute_penalty_guide",
            func_sign: "def compute_penalty_guide(dist_mat: np.ndarray) -> np.ndarray",
            func_desc: "Return a nonnegative n x n guide matrix. When 2-opt is stuck, the tour edge with the largest guide / (1 + penalty) receives a penalty, steering the search away from it. The matrix is computed once per instance.",
            objective_desc: MIN_LENGTH,
            hint: "edges that are long relative to each endpoint's nearest neighbors",
            seed: seed!("tsp_gls"),
            backbone: || Backbone::Gls { params: GlsParams::default() },
            recipe: InstanceRecipe::Tsp { n: 200, distribution: TspDistribution::Uniform },
            n_instances: 10,
        },
        Spec {
            id: "p_median_grasp",
            prob_name: "p-Median",
            func_name: "compute_node_scores",
            func_sign: "def compute_node_scores(dist_mat: np.ndarray) -> np.ndarray",
            func_desc: "Return a nonnegative score per node. GRASP blends these static scores with the marginal decrease of the total assignment distance when choosing facilities.",
            objective_desc: "Minimize the mean total distance from every node to its nearest open facility.",
            hint: "local density and spread of good sites across the region",
            seed: seed!("p_median_grasp"),
            backbone: grasp,
            recipe: InstanceRecipe::Dlp { n: 100, variant: DlpVariant::Median, p: Some(10) },
            n_instances: 5,
        },
        Spec {
            id: "p_center_grasp",
            prob_name: "p-Center",
            func_name: "compute_node_scores",
            func_sign: "def compute_node_scores(dist_mat: np.ndarray) -> np.ndarray",
            func_desc: "Return a nonnegative score per node. GRASP blends these static scores with the marginal decrease of the largest assignment distance when choosing facilities.",
            objective_desc: "Minimize the mean of the largest node-to-nearest-facility distance.",
            hint: "coverage of outlying nodes rather than average closeness",
            seed: seed!("p_center_grasp"),
            backbone: grasp,
            recipe: InstanceRecipe::Dlp { n: 100, variant: DlpVariant::Center, p: Some(10) },
            n_instances: 5,
        },
        Spec {
            id: "p_cover_grasp",
            prob_name: "p-Cover",
            func_name: "compute_node_scores",
            func_sign: "def compute_node_scores(dist_mat: np.ndarray, demands: np.ndarray, radius: float) -> np.ndarray",
            func_desc: "Return a nonnegative score per node. GRASP blends these static scores with the marginal newly covered demand when choosing facilities; a node is covered within the radius of an open facility.",
            objective_desc: "Maximize the mean covered demand; the score is its negation, so lower is better.",
            hint: "overlap between coverage discs of good sites",
            seed: seed!("p_cover_grasp"),
            backbone: grasp,
            recipe: InstanceRecipe::Dlp { n: 100, variant: DlpVariant::Cover, p: Some(10) },
            n_instances: 5,
        },
        Spec {
            id: "p_dispersion_grasp",
            prob_name: "p-Dispersion",
            func_name: "compute_guide_matrix",
            func_sign: "def compute_guide_matrix(dist_mat: np.ndarray) -> np.ndarray",
            func_desc: "Return a nonnegative n x n guide matrix. GRASP scores a node by its mean guide value to the already selected nodes, blended with its distance to the closest selected node.",
            objective_desc: "Maximize the mean minimum pairwise distance among selected nodes; the score is its negation, so lower is better.",
            hint: "nodes on the convex hull and pairs that constrain the minimum distance",
            seed: seed!("p_dispersion_grasp"),
            backbone: grasp,
            recipe: InstanceRecipe::Dlp { n: 100, variant: DlpVariant::Dispersion, p: Some(10) },
            n_instances: 5,
        },
    ]
});

/// Ids of the registered tasks.
pub fn task_ids() -> Vec<&'static str> {
    SPECS.iter().map(|s| s.id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_task_generates_instances() {
        for id in task_ids() {
            let task = Task::builtin(id).unwrap();
            let small = InstanceRecipe::generate(&task.recipe.resized(12), 2, 7).unwrap();
            assert_eq!(small.len(), 2, "{id}");
            assert!(task.seed_code.contains(&format!("def {}(", task.func_name)), "{id}");
            assert_eq!(task.mode() == Mode::Artifact, task.artifact_kind().is_some(), "{id}");
        }
    }

    #[test]
    fn tasks_round_trip_through_json() {
        let t = Task::builtin("lvrp_aco").unwrap();
        let back: Task = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn instance_sets_are_prefix_stable() {
        let r = InstanceRecipe::Tsp { n: 10, distribution: TspDistribution::Clustered };
        let a = r.generate(3, 11).unwrap();
        let b = r.generate(5, 11).unwrap();
        assert_eq!(a[..], b[..3]);
    }
}
