//! A full-heap sweep agrees with the stored reference counts after every
//! demo scenario.

mod common;

#[test]
fn every_scenario_leaves_a_clean_heap() {
    for eager in [false, true] {
        for (name, problems, leaked) in common::audit_scenarios(eager) {
            assert_eq!(problems, 0, "{name} (eager={eager})");
            assert_eq!(leaked, 0, "{name} (eager={eager}) leaves objects after release");
        }
    }
}

#[test]
fn audit_after_each_query() {
    for sc in common::scenarios() {
        let mut rt = common::runtime(false);
        for src in sc.sources {
            rt.consult_str(src).unwrap();
        }
        for line in sc.input.split_inclusive(".\n") {
            common::session(&mut rt, line);
            let report = rt.audit();
            assert!(report.is_clean(), "{}: after {line:?}: {report:?}", sc.name);
        }
    }
}
