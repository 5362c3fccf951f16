use rstre_core::harness::{execute, render_csv, ExperimentConfig};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_text(text).unwrap()
}

#[test]
fn csv_bodies_do_not_depend_on_workers() {
    for text in [
        "experiment=overlap-sweep\ngraph=complete:8\nbeta=0,1\nreplicas=6\nsamples=30\nseed=3",
        "experiment=diameter-scaling\ngraph=complete:20\nn-grid=20,40\nbeta=n^2\nreplicas=5\nseed=3",
        "experiment=mst-equality\ngraph=complete:6\nbeta=10\nreplicas=12\nseed=3",
        "experiment=free-energy-sweep\ngraph=box:1:2\nboundary=wired\nbeta=0.5\nreplicas=3\nseed=3",
    ] {
        let mut c = config(text);
        c.workers = 1;
        let a = render_csv(&[], &execute(&c).unwrap().rows).unwrap();
        c.workers = 8;
        let b = render_csv(&[], &execute(&c).unwrap().rows).unwrap();
        assert_eq!(a, b, "{text}");
    }
}

#[test]
fn replica_rows_depend_only_on_their_index() {
    let mut c = config("experiment=length-sweep\ngraph=complete:9\nbeta=2\nreplicas=3\nsamples=5\nseed=11");
    let few = execute(&c).unwrap().rows;
    c.replicas = 6;
    let many = execute(&c).unwrap().rows;
    for r in few.iter().filter(|r| r.replica.is_some()) {
        assert!(many.contains(r));
    }
}
