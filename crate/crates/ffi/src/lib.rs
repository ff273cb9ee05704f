//! C interface to the colonygraph library.
//!
//! Fallible calls return a [`CgStatus`]; after a failure `cg_last_error`
//! returns a message for the calling thread. Simulations, graphs and models
//! cross the boundary as opaque pointers released with their `_free` call.
//! Strings handed out by the library are released with `cg_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use colonygraph::abm::{
    compute_gamma, compute_x, make_initial_condition, place_sites, AgentState, InitialCondition, Simulation,
    TransitionParams, WorldConfig,
};
use colonygraph::campaign::{run_campaign, Campaign};
use colonygraph::codec::{state_to_float, CodecSettings};
use colonygraph::encoder::{edge_score, embed_graph, EncoderModel};
use colonygraph::graph::CollectiveGraph;
use colonygraph::rng::{derive_seed, seeded};
use colonygraph::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Config = 4,
    Invariant = 5,
    Capacity = 6,
    Graph = 7,
    Shape = 8,
    Diverged = 9,
    Io = 10,
    Format = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// Agent state codes accepted by `cg_state_to_float` and used for the order of
/// `cg_simulation_state_counts`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgAgentState {
    Observe = 0,
    Explore = 1,
    Assess = 2,
    Recruit = 3,
    TravelHubObserve = 4,
    TravelHubRecruit = 5,
    TravelSite = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgPreset {
    Table2 = 0,
    Experiment1 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgInitialCondition {
    AllObserve = 0,
    HalfExploreHalfObserve = 1,
    NinetyObserveTenRecruitWorst = 2,
    Random = 3,
}

/// Everything needed to start one trial. `preset` and `initial` take the
/// values of `CgPreset` and `CgInitialCondition`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgWorldSpec {
    pub preset: u32,
    pub initial: u32,
    pub qualities: *const f64,
    pub site_count: usize,
    pub site_distance: f64,
    pub max_distance: f64,
    pub agents: usize,
    pub threshold: f64,
    pub max_ticks: u64,
    pub seed: u64,
}

/// Where a trial stands. `site` is -1 until a quorum forms.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CgRunSummary {
    pub finished: bool,
    pub site: i64,
    pub ticks: u64,
}

pub struct CgSimulation {
    sim: Simulation,
}

pub struct CgGraph {
    graph: CollectiveGraph,
}

pub struct CgModel {
    model: EncoderModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) | Error::Analysis(_) => CgStatus::Domain,
            Error::Config(_) => CgStatus::Config,
            Error::Invariant(_) => CgStatus::Invariant,
            Error::Capacity { .. } => CgStatus::Capacity,
            Error::NonCanonical(_) | Error::Graph(_) => CgStatus::Graph,
            Error::Shape(_) => CgStatus::Shape,
            Error::Diverged { .. } => CgStatus::Diverged,
            Error::Io { .. } => CgStatus::Io,
            Error::Serde(_) | Error::Csv(_) => CgStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: CgStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CgStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(CgStatus::NullPointer, format!("{name} is null")))
}

unsafe fn in_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(CgStatus::NullPointer, format!("{name} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(CgStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(CgStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| fail(CgStatus::InvalidArgument, "string holds a NUL byte"))
}

fn agent_state(code: u32) -> Option<AgentState> {
    AgentState::ALL.get(code as usize).copied()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn cg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Recruit-dwell continuation `2 / (2 + e^(-7q))`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn cg_compute_x(q: f64, out: *mut f64) -> CgStatus {
    guard(|| {
        *out_ref(out, "out")? = compute_x(q)?;
        Ok(())
    })
}

/// Reassessment factor `sqrt(q)`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn cg_compute_gamma(q: f64, out: *mut f64) -> CgStatus {
    guard(|| {
        *out_ref(out, "out")? = compute_gamma(q)?;
        Ok(())
    })
}

/// Float code of a `CgAgentState`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn cg_state_to_float(state: u32, out: *mut f64) -> CgStatus {
    guard(|| {
        let s = agent_state(state).ok_or_else(|| fail(CgStatus::InvalidArgument, format!("unknown state {state}")))?;
        *out_ref(out, "out")? = state_to_float(s);
        Ok(())
    })
}

/// `sigmoid(x . y)` for two 3-vectors.
///
/// # Safety
/// `x` and `y` must each point to 3 doubles; `out` to one.
#[no_mangle]
pub unsafe extern "C" fn cg_edge_score(x: *const f64, y: *const f64, out: *mut f64) -> CgStatus {
    guard(|| {
        if x.is_null() || y.is_null() {
            return Err(fail(CgStatus::NullPointer, "embedding pointer is null"));
        }
        let a: [f64; 3] = std::slice::from_raw_parts(x, 3).try_into().expect("length 3");
        let b: [f64; 3] = std::slice::from_raw_parts(y, 3).try_into().expect("length 3");
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(fail(CgStatus::Domain, "embedding is not finite"));
        }
        *out_ref(out, "out")? = edge_score(&a, &b);
        Ok(())
    })
}

/// Builds a trial: sites placed at `site_distance` with a rotation drawn from
/// `seed`, colony drawn from the requested initial condition.
///
/// # Safety
/// `spec` must be valid, `spec.qualities` must point to `spec.site_count`
/// doubles, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_new(spec: *const CgWorldSpec, out: *mut *mut CgSimulation) -> CgStatus {
    guard(|| {
        let spec = in_ref(spec, "spec")?;
        let out = out_ref(out, "out")?;
        if spec.qualities.is_null() || spec.site_count == 0 {
            return Err(fail(CgStatus::InvalidArgument, "no site qualities"));
        }
        let qualities = std::slice::from_raw_parts(spec.qualities, spec.site_count);
        let params = match spec.preset {
            0 => TransitionParams::table2(),
            1 => TransitionParams::experiment1(spec.max_distance),
            p => return Err(fail(CgStatus::InvalidArgument, format!("unknown preset {p}"))),
        };
        let initial = match spec.initial {
            0 => InitialCondition::AllObserve,
            1 => InitialCondition::HalfExploreHalfObserve,
            2 => InitialCondition::NinetyObserveTenRecruitWorst,
            3 => InitialCondition::Random,
            c => return Err(fail(CgStatus::InvalidArgument, format!("unknown initial condition {c}"))),
        };
        let mut rng = seeded(derive_seed(spec.seed, &[0]));
        let sites = place_sites(qualities, spec.site_distance, &mut rng);
        let world = WorldConfig::new(spec.max_distance, sites, spec.agents, spec.threshold, spec.max_ticks, spec.seed);
        world.validate()?;
        let colony = make_initial_condition(initial, &world, &params, &mut rng)?;
        let sim = Simulation::new(&world, &params, &colony, derive_seed(spec.seed, &[1]))?;
        *out = Box::into_raw(Box::new(CgSimulation { sim }));
        Ok(())
    })
}

fn summary(sim: &Simulation) -> CgRunSummary {
    CgRunSummary {
        finished: sim.finished(),
        site: sim.quorum().map_or(-1, |s| s as i64),
        ticks: sim.tick(),
    }
}

/// Advances at most `ticks` ticks, stopping early once the trial finishes.
///
/// # Safety
/// `sim` must come from `cg_simulation_new`; `out` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_step(sim: *mut CgSimulation, ticks: u64, out: *mut CgRunSummary) -> CgStatus {
    guard(|| {
        let s = &mut out_ref(sim, "sim")?.sim;
        for _ in 0..ticks {
            if s.finished() {
                break;
            }
            s.step()?;
        }
        if let Some(o) = out.as_mut() {
            *o = summary(s);
        }
        Ok(())
    })
}

/// Runs until quorum or the tick budget.
///
/// # Safety
/// `sim` must come from `cg_simulation_new`; `out` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_run(sim: *mut CgSimulation, out: *mut CgRunSummary) -> CgStatus {
    cg_simulation_step(sim, u64::MAX, out)
}

/// Agent counts per state, written to `out[7]` in `CgAgentState` order.
///
/// # Safety
/// `sim` must be valid and `out` must point to 7 writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_state_counts(sim: *const CgSimulation, out: *mut usize) -> CgStatus {
    guard(|| {
        let s = &in_ref(sim, "sim")?.sim;
        if out.is_null() {
            return Err(fail(CgStatus::NullPointer, "out is null"));
        }
        let counts = std::slice::from_raw_parts_mut(out, AgentState::ALL.len());
        counts.fill(0);
        for a in s.agents() {
            let i = AgentState::ALL.iter().position(|&x| x == a.state).expect("state listed");
            counts[i] += 1;
        }
        Ok(())
    })
}

/// Canonical float tensor of the current colony (40 values for up to 10
/// agents). `written` receives the length; `CG_STATUS_BUFFER_TOO_SMALL`
/// reports it without writing when `capacity` is short.
///
/// # Safety
/// `sim` must be valid, `out` must point to `capacity` doubles and `written`
/// to a `size_t`.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_tensor(
    sim: *const CgSimulation,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CgStatus {
    guard(|| {
        let s = &in_ref(sim, "sim")?.sim;
        let written = out_ref(written, "written")?;
        let w = s.world();
        let t = CodecSettings::default().encode(s.agents(), &w.sites, w.max_distance)?;
        *written = t.values.len();
        if capacity < t.values.len() {
            return Err(fail(CgStatus::BufferTooSmall, format!("tensor needs {} values", t.values.len())));
        }
        if out.is_null() {
            return Err(fail(CgStatus::NullPointer, "out is null"));
        }
        std::slice::from_raw_parts_mut(out, t.values.len()).copy_from_slice(&t.values);
        Ok(())
    })
}

/// # Safety
/// `sim` must come from `cg_simulation_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cg_simulation_free(sim: *mut CgSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_graph_load(path: *const c_char, out: *mut *mut CgGraph) -> CgStatus {
    guard(|| {
        let path = PathBuf::from(c_str(path, "path")?);
        let out = out_ref(out, "out")?;
        let graph = CollectiveGraph::load(&path)?;
        *out = Box::into_raw(Box::new(CgGraph { graph }));
        Ok(())
    })
}

/// # Safety
/// `graph` must be valid and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cg_graph_save(graph: *const CgGraph, path: *const c_char) -> CgStatus {
    guard(|| {
        let g = &in_ref(graph, "graph")?.graph;
        g.save(&PathBuf::from(c_str(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `graph` must be valid; `nodes` and `edges` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn cg_graph_counts(graph: *const CgGraph, nodes: *mut usize, edges: *mut usize) -> CgStatus {
    guard(|| {
        let g = &in_ref(graph, "graph")?.graph;
        if let Some(n) = nodes.as_mut() {
            *n = g.node_count();
        }
        if let Some(e) = edges.as_mut() {
            *e = g.edge_count();
        }
        Ok(())
    })
}

/// Key of the `index`-th node in ascending key order, the row order of
/// `cg_model_embed`. Free the result with `cg_string_free`.
///
/// # Safety
/// `graph` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_graph_node_key(graph: *const CgGraph, index: usize, out: *mut *mut c_char) -> CgStatus {
    guard(|| {
        let g = &in_ref(graph, "graph")?.graph;
        let out = out_ref(out, "out")?;
        let key = g
            .nodes()
            .keys()
            .nth(index)
            .ok_or_else(|| fail(CgStatus::InvalidArgument, format!("node index {index} out of range")))?;
        *out = into_c_string(key.clone())?;
        Ok(())
    })
}

/// # Safety
/// `graph` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_graph_largest_component(graph: *const CgGraph, out: *mut *mut CgGraph) -> CgStatus {
    guard(|| {
        let g = &in_ref(graph, "graph")?.graph;
        let out = out_ref(out, "out")?;
        let c = g.largest_weakly_connected_component()?;
        *out = Box::into_raw(Box::new(CgGraph { graph: c }));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cg_graph_free(graph: *mut CgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Freshly initialized encoder.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_model_new(seed: u64, out: *mut *mut CgModel) -> CgStatus {
    guard(|| {
        *out_ref(out, "out")? = Box::into_raw(Box::new(CgModel { model: EncoderModel::new(seed) }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_model_load(path: *const c_char, out: *mut *mut CgModel) -> CgStatus {
    guard(|| {
        let path = PathBuf::from(c_str(path, "path")?);
        let out = out_ref(out, "out")?;
        let model = EncoderModel::load(&path)?;
        *out = Box::into_raw(Box::new(CgModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be valid and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cg_model_save(model: *const CgModel, path: *const c_char) -> CgStatus {
    guard(|| {
        let m = &in_ref(model, "model")?.model;
        m.save(&PathBuf::from(c_str(path, "path")?))?;
        Ok(())
    })
}

/// Embeds every node of `graph` into `out` as row-major `rows x 3` doubles in
/// ascending key order. `rows` receives the node count; a short `capacity`
/// (in doubles) yields `CG_STATUS_BUFFER_TOO_SMALL` without writing.
///
/// # Safety
/// `model` and `graph` must be valid, `out` must point to `capacity` doubles
/// and `rows` to a `size_t`.
#[no_mangle]
pub unsafe extern "C" fn cg_model_embed(
    model: *const CgModel,
    graph: *const CgGraph,
    out: *mut f64,
    capacity: usize,
    rows: *mut usize,
) -> CgStatus {
    guard(|| {
        let m = &in_ref(model, "model")?.model;
        let g = &in_ref(graph, "graph")?.graph;
        let rows = out_ref(rows, "rows")?;
        *rows = g.node_count();
        if capacity < 3 * g.node_count() {
            return Err(fail(CgStatus::BufferTooSmall, format!("embedding needs {} values", 3 * g.node_count())));
        }
        if out.is_null() {
            return Err(fail(CgStatus::NullPointer, "out is null"));
        }
        let emb = embed_graph(m, g)?;
        let dst = std::slice::from_raw_parts_mut(out, 3 * emb.len());
        for (chunk, v) in dst.chunks_exact_mut(3).zip(emb.values()) {
            chunk.copy_from_slice(v);
        }
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cg_model_free(model: *mut CgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs a campaign described as JSON (the `campaign.json` layout, e.g.
/// `{"preset":"experiment1","trials":20}`) into `out_dir`. On success
/// `report_json`, if not NULL, receives a summary to free with
/// `cg_string_free`.
///
/// # Safety
/// `campaign_json` and `out_dir` must be NUL-terminated strings;
/// `report_json` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn cg_run_campaign(
    campaign_json: *const c_char,
    out_dir: *const c_char,
    workers: usize,
    report_json: *mut *mut c_char,
) -> CgStatus {
    guard(|| {
        let text = c_str(campaign_json, "campaign_json")?;
        let out = PathBuf::from(c_str(out_dir, "out_dir")?);
        let campaign: Campaign = serde_json::from_str(text).map_err(|e| fail(CgStatus::Format, e.to_string()))?;
        let report = run_campaign(&campaign, &out, workers)?;
        if let Some(r) = report_json.as_mut() {
            *r = into_c_string(serde_json::to_string(&report).map_err(|e| fail(CgStatus::Format, e.to_string()))?)?;
        }
        Ok(())
    })
}
