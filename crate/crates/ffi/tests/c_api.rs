use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use colonygraph_ffi::*;

fn last_error() -> String {
    let p = cg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn spec(qualities: &[f64], seed: u64) -> CgWorldSpec {
    CgWorldSpec {
        preset: CgPreset::Table2 as u32,
        initial: CgInitialCondition::AllObserve as u32,
        qualities: qualities.as_ptr(),
        site_count: qualities.len(),
        site_distance: 100.0,
        max_distance: 1000.0,
        agents: 10,
        threshold: 0.5,
        max_ticks: 35000,
        seed,
    }
}

#[test]
fn pure_functions() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(cg_compute_x(1.0, &mut v), CgStatus::Ok);
        assert!((v - 0.9995442668046636).abs() < 1e-15);
        assert_eq!(cg_compute_gamma(0.25, &mut v), CgStatus::Ok);
        assert_eq!(v, 0.5);
        assert_eq!(cg_compute_x(1.5, &mut v), CgStatus::Domain);
        assert!(last_error().contains("1.5"));
        assert_eq!(cg_compute_x(0.5, ptr::null_mut()), CgStatus::NullPointer);

        assert_eq!(cg_state_to_float(CgAgentState::Recruit as u32, &mut v), CgStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(cg_state_to_float(CgAgentState::TravelHubObserve as u32, &mut v), CgStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(cg_state_to_float(7, &mut v), CgStatus::InvalidArgument);

        let x = [1.0, 1.0, 1.0];
        assert_eq!(cg_edge_score(x.as_ptr(), x.as_ptr(), &mut v), CgStatus::Ok);
        assert!((v - 0.9525741268224334).abs() < 1e-15);
    }
    assert!(cg_last_error().is_null());
}

#[test]
fn simulation_handle_runs_to_quorum_reproducibly() {
    let qs = [0.9, 0.7];
    let mut results = Vec::new();
    for _ in 0..2 {
        let mut sim = ptr::null_mut();
        unsafe {
            assert_eq!(cg_simulation_new(&spec(&qs, 11), &mut sim), CgStatus::Ok);
            let mut counts = [0usize; 7];
            assert_eq!(cg_simulation_state_counts(sim, counts.as_mut_ptr()), CgStatus::Ok);
            assert_eq!(counts[CgAgentState::Observe as usize], 10);

            let mut s = CgRunSummary::default();
            assert_eq!(cg_simulation_step(sim, 5, &mut s), CgStatus::Ok);
            assert_eq!(s.ticks, 5);
            assert_eq!(cg_simulation_run(sim, &mut s), CgStatus::Ok);
            assert!(s.finished && s.site >= 0);

            let mut tensor = [0.0; 40];
            let mut n = 0;
            assert_eq!(cg_simulation_tensor(sim, tensor.as_mut_ptr(), 10, &mut n), CgStatus::BufferTooSmall);
            assert_eq!(n, 40);
            assert_eq!(cg_simulation_tensor(sim, tensor.as_mut_ptr(), 40, &mut n), CgStatus::Ok);
            cg_simulation_free(sim);
            results.push((s, tensor));
        }
    }
    assert_eq!(results[0], results[1]);
}

#[test]
fn bad_specs_are_reported() {
    let qs = [0.9, 0.7];
    let mut sim = ptr::null_mut();
    let mut s = spec(&qs, 1);
    s.agents = 0;
    unsafe {
        assert_ne!(cg_simulation_new(&s, &mut sim), CgStatus::Ok);
        assert!(sim.is_null());
        let mut s = spec(&qs, 1);
        s.preset = 9;
        assert_eq!(cg_simulation_new(&s, &mut sim), CgStatus::InvalidArgument);
        assert_eq!(cg_simulation_new(ptr::null(), &mut sim), CgStatus::NullPointer);
        cg_simulation_free(ptr::null_mut());
    }
}

#[test]
fn campaign_graph_and_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
    let json = CString::new(r#"{"preset":"experiment1","trials":6,"encoding":"float"}"#).unwrap();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(cg_run_campaign(json.as_ptr(), out.as_ptr(), 1, &mut report), CgStatus::Ok, "{}", last_error());
        let text = CStr::from_ptr(report).to_string_lossy().into_owned();
        cg_string_free(report);
        assert!(text.contains("\"trials\":6"));

        let path = CString::new(dir.path().join("run/graph.json").to_str().unwrap()).unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(cg_graph_load(path.as_ptr(), &mut g), CgStatus::Ok);
        let (mut nodes, mut edges) = (0, 0);
        assert_eq!(cg_graph_counts(g, &mut nodes, &mut edges), CgStatus::Ok);
        assert!(nodes > 1 && edges > 0);

        let mut key = ptr::null_mut();
        assert_eq!(cg_graph_node_key(g, 0, &mut key), CgStatus::Ok);
        assert_eq!(CStr::from_ptr(key).to_bytes().len(), 64);
        cg_string_free(key);
        assert_eq!(cg_graph_node_key(g, nodes, &mut key), CgStatus::InvalidArgument);

        let mut m = ptr::null_mut();
        assert_eq!(cg_model_new(3, &mut m), CgStatus::Ok);
        let model_path = CString::new(dir.path().join("model.json").to_str().unwrap()).unwrap();
        assert_eq!(cg_model_save(m, model_path.as_ptr()), CgStatus::Ok);
        let mut m2 = ptr::null_mut();
        assert_eq!(cg_model_load(model_path.as_ptr(), &mut m2), CgStatus::Ok);

        let mut rows = 0;
        assert_eq!(cg_model_embed(m, g, ptr::null_mut(), 0, &mut rows), CgStatus::BufferTooSmall);
        assert_eq!(rows, nodes);
        let mut a = vec![0.0; 3 * rows];
        let mut b = vec![0.0; 3 * rows];
        assert_eq!(cg_model_embed(m, g, a.as_mut_ptr(), a.len(), &mut rows), CgStatus::Ok);
        assert_eq!(cg_model_embed(m2, g, b.as_mut_ptr(), b.len(), &mut rows), CgStatus::Ok);
        assert_eq!(a, b);

        let mut c = ptr::null_mut();
        assert_eq!(cg_graph_largest_component(g, &mut c), CgStatus::Ok);
        cg_graph_free(c);
        cg_graph_free(g);
        cg_model_free(m);
        cg_model_free(m2);

        let missing = CString::new("/nonexistent/graph.json").unwrap();
        assert_eq!(cg_graph_load(missing.as_ptr(), &mut g), CgStatus::Io);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/colonygraph.h");
    let source = include_str!("../src/lib.rs");
    let exported: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exported.len() > 20);
    for name in exported {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(status) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(status.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"colonygraph.h\"\nint main(void) { double v; return cg_compute_x(0.5, &v) == CG_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
