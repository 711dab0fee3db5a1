use spectral_mpc::scenario::Scenario;
use spectral_mpc::sim::{self, RunArtifacts};

const BASE: &str = r#"
schema_version = 1
name = "small"
duration = 0.02
seed = 3

[plant]
vin = 48.0
inductance = 42e-6
capacitance = 5000e-6
vref = 12.0
load = { kind = "resistance", value = 1.2 }
load_jitter = 0.5

[control]
fc = 400e3
window = 256
horizon = 2
lambda1 = 1.0
lambda2 = 0.0
norm = "inf"
k_max = 12

[filter]
gaps = [{ center = 50e3, width = 6e3, weight = 20.0 }]
"#;

fn scenario(extra: &str) -> Scenario {
    Scenario::from_toml_str(&format!("{BASE}{extra}")).unwrap()
}

fn run(sc: &Scenario) -> RunArtifacts {
    sim::run_scenario(sc).unwrap()
}

#[test]
fn same_seed_same_run() {
    let sc = scenario("");
    let a = run(&sc);
    let b = run(&sc);
    assert_eq!(a.traces.switch, b.traces.switch);
    assert_eq!(a.traces.vc, b.traces.vc);
    assert_eq!(sim::analyze(&a).unwrap(), sim::analyze(&b).unwrap());
}

#[test]
fn seed_drives_load_jitter() {
    let a = run(&scenario(""));
    let mut sc = scenario("");
    sc.seed = 4;
    let b = run(&sc);
    assert_ne!(a.traces.vc, b.traces.vc);
}

#[test]
fn parallel_evaluation_changes_nothing() {
    for horizon in [1, 3] {
        let mut sc = scenario("");
        sc.control.horizon = horizon;
        let seq = run(&sc);
        sc.control.parallel = true;
        let par = run(&sc);
        assert_eq!(seq.traces.switch, par.traces.switch, "horizon {horizon}");
        assert_eq!(seq.traces.duty, par.traces.duty);
    }
}

#[test]
fn holding_bound_is_never_exceeded() {
    let a = run(&scenario(""));
    let m = sim::analyze(&a).unwrap();
    assert_eq!(m.k_max_violations, 0);
    assert!(m.max_run_length <= 12, "{}", m.max_run_length);
}

#[test]
fn tighter_bound_from_an_event() {
    let sc = scenario("\n[[events]]\nkind = \"k_max\"\ntime = 0.01\nk_max = 3\n");
    let a = run(&sc);
    let half = a.traces.len() / 2 + 1;
    let mut run_len = 1;
    for w in a.traces.switch[half..].windows(2) {
        run_len = if w[0] == w[1] { run_len + 1 } else { 1 };
        assert!(run_len <= 3);
    }
    assert_eq!(sim::analyze(&a).unwrap().k_max_violations, 0);
}

#[test]
fn output_stays_regulated() {
    let m = sim::analyze(&run(&scenario(""))).unwrap();
    assert!((m.mean_vc - 12.0).abs() < 0.12, "mean {}", m.mean_vc);
    assert!(m.avg_switching_frequency > 0.0);
}

#[test]
fn gap_move_is_recorded() {
    let sc = scenario("\n[[events]]\nkind = \"gap_move\"\ntime = 0.005\ngap = 0\ncenter = 80e3\n");
    let a = run(&sc);
    let last = a.gap_history.last().unwrap();
    assert_eq!(last.1, 0);
    assert_eq!(last.2, 80e3);
}

#[test]
fn load_step_after_the_run_has_no_metrics() {
    let sc = scenario("\n[[events]]\nkind = \"load_step\"\ntime = 1.0\nload = { kind = \"resistance\", value = 2.4 }\n");
    let m = sim::analyze(&run(&sc)).unwrap();
    assert!(m.load_step.is_none());
}

#[test]
fn load_step_is_measured() {
    let mut sc = scenario("\n[[events]]\nkind = \"load_step\"\ntime = 0.01\nload = { kind = \"resistance\", value = 2.4 }\n");
    sc.analysis.settle_window = 0.001;
    let m = sim::analyze(&run(&sc)).unwrap();
    let ls = m.load_step.unwrap();
    assert_eq!(ls.time, 0.01);
    assert!(ls.mean_vc_before.is_finite() && ls.mean_vc_after.is_finite());
    assert_eq!(ls.gap_depth_before_db.len(), 1);
}

#[test]
fn scenario_round_trips_through_toml() {
    let sc = scenario("");
    let again = Scenario::from_toml_str(&sc.to_toml_string()).unwrap();
    assert_eq!(sc, again);
}
