use std::fs;

use annealkit::archive::{read_entry, Manifest};
use annealkit::chimera::ChimeraGraph;
use annealkit::exact::ground_energy_by_components;
use annealkit::experiment::{
    generate, load_instance, run_experiment, summarize, verify, ExperimentConfig, GenerateRequest,
};
use annealkit::generators::InstanceClass;
use annealkit::metrics::{read_csv, success_fraction, SuccessCriterion};

fn request(class: InstanceClass, count: usize, seed: u64) -> GenerateRequest {
    let hardware = matches!(class, InstanceClass::Ran | InstanceClass::Fl);
    GenerateRequest {
        class,
        precision: if class == InstanceClass::Fl { 2 } else { 1 },
        ratio: match class {
            InstanceClass::Fl => 0.25,
            InstanceClass::Nae => 2.1,
            _ => 0.0,
        },
        target: hardware.then(|| ChimeraGraph::build(2).unwrap()),
        size: 10,
        count,
        seed,
        unique: class == InstanceClass::Nae,
    }
}

#[test]
fn generation_is_reproducible_and_verifiable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for class in [InstanceClass::Ran, InstanceClass::Fl, InstanceClass::ThreeMc, InstanceClass::Nae] {
        let pa = generate(&request(class, 3, 42), a.path()).unwrap();
        let pb = generate(&request(class, 3, 42), b.path()).unwrap();
        assert_eq!(pa.len(), 3);
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
            let (ham, meta) = load_instance(x).unwrap();
            let meta = meta.expect("sidecar written");
            assert_eq!(meta.spec.class, class);
            let report = verify(&ham, Some(&meta), 32).unwrap();
            assert!(report.ground_energy.is_some());
            if class == InstanceClass::Fl {
                let planted = report.planted.unwrap();
                assert!(planted.consistent);
                assert_eq!(planted.is_ground, Some(true));
            }
            if class == InstanceClass::Nae {
                assert_eq!(report.degeneracy, Some(2));
            }
        }
    }
}

#[test]
fn archived_readouts_reproduce_the_metrics() {
    let dir = tempfile::tempdir().unwrap();
    // 24 working qubits, so the reference is an exact ground energy.
    let full = ChimeraGraph::build(2).unwrap();
    let dead: Vec<usize> = full.qubits().filter(|&q| full.cell(q) == (1, 1)).collect();
    let req = GenerateRequest {
        target: Some(full.without_qubits(&dead)),
        ..request(InstanceClass::Ran, 2, 7)
    };
    let paths = generate(&req, dir.path()).unwrap();
    let names: Vec<String> = paths
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let text = format!(
        "name = \"archive\"\nseed = 1\narchive = true\ninstances = {names:?}\n\
         [sampling]\nreads = 400\ngauges = [1, 4]\n"
    );
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let out = run_experiment(&config, dir.path()).unwrap();
    let csv_path = dir.path().join("out/metrics.csv");
    let archive_dir = dir.path().join("out/raw");
    out.write(&csv_path, Some(&archive_dir)).unwrap();

    let rows = read_csv(fs::File::open(&csv_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    let manifest = Manifest::load(&archive_dir).unwrap();
    assert_eq!(manifest.entries.len(), 4);
    for entry in &manifest.entries {
        let (ham, _) = load_instance(&dir.path().join(format!("{}.txt", entry.instance_id))).unwrap();
        let ground = ground_energy_by_components(&ham, 28).unwrap();
        let records = read_entry(&archive_dir, entry).unwrap();
        assert!(records.iter().all(|(g, _)| *g < entry.gauges));
        let energies = records.iter().map(|(_, s)| ham.energy(s).unwrap());
        let pi = success_fraction(energies, &SuccessCriterion::exact(ground));
        let row = rows
            .iter()
            .find(|r| r.instance_id == entry.instance_id && r.tags == entry.tags)
            .unwrap();
        assert_eq!(row.success_prob, pi);
        assert!(row.tags.ends_with("ref=exact"));
    }

    let summary = summarize(&rows).unwrap();
    assert_eq!(summary.len(), 2);
}

#[test]
fn embedded_experiment_scores_logical_energies() {
    let dir = tempfile::tempdir().unwrap();
    let paths = generate(&request(InstanceClass::ThreeMc, 2, 3), dir.path()).unwrap();
    let names: Vec<String> = paths
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let text = format!(
        "seed = 2\ninstances = {names:?}\npostprocess = [\"majority_vote\"]\n\
         [sampling]\nreads = 300\ngauges = [3]\n\
         [embedding]\nmethod = \"heuristic\"\nchimera_k = 3\n[embedding.kappa]\npolicy = \"fixed\"\nvalue = 2.0\n"
    );
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let rows = run_experiment(&config, dir.path()).unwrap().rows;
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.n, 10);
        assert!(r.qubits >= 10);
        assert!(r.tags.contains("kappa=2") && r.tags.contains("ref=exact"), "{}", r.tags);
        assert!(r.success_prob > 0.0, "{r:?}");
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|x| x == "toml") {
            let config = ExperimentConfig::load(&path).unwrap();
            config.validate().unwrap();
            assert!(!config.instances.is_empty(), "{}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn instance_directories_expand_in_name_order() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    generate(&request(InstanceClass::ThreeMc, 3, 5), &inst).unwrap();
    let config = ExperimentConfig::from_toml(
        "instances = [\"inst\"]\n[sampling]\nreads = 50\ngauges = [1]\n",
    )
    .unwrap();
    let rows = run_experiment(&config, dir.path()).unwrap().rows;
    let ids: Vec<&str> = rows.iter().map(|r| r.instance_id.as_str()).collect();
    assert_eq!(ids, ["3mc-0000", "3mc-0001", "3mc-0002"]);

    fs::create_dir(dir.path().join("empty")).unwrap();
    let empty = ExperimentConfig::from_toml("instances = [\"empty\"]\n").unwrap();
    assert!(run_experiment(&empty, dir.path()).is_err());
}
