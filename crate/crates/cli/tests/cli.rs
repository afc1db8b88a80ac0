use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_bigint::BigUint;
use serde_json::Value;
use tempfile::TempDir;

use ppba::paillier;
use ppba::protocol::{EnrollmentRecord, FeatureVector, UserSecrets};
use ppba::{PrivateKey, PublicKey};

struct Lab {
    dir: TempDir,
}

impl Lab {
    fn new() -> Self {
        Lab {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_ppba"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
        out
    }

    fn json(&self, rel: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.path(rel)).unwrap()).unwrap()
    }

    fn read<T: serde::de::DeserializeOwned>(&self, rel: &str) -> T {
        serde_json::from_str(&fs::read_to_string(self.path(rel)).unwrap()).unwrap()
    }
}

const SEEDED: [&str; 2] = ["--insecure-seeded-rng", "--seed"];

fn seeded<'a>(args: &[&'a str], seed: &'a str) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(&SEEDED);
    v.push(seed);
    v
}

fn schema_check(report: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/scenario-result.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let messages: Vec<String> = match compiled.validate(report) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(messages.is_empty(), "report violates schema: {messages:?}");
}

fn hex_list(v: &Value) -> Vec<BigUint> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| ppba::hexint::from_hex(x.as_str().unwrap()).unwrap())
        .collect()
}

#[test]
fn keygen_writes_a_valid_pair() {
    let lab = Lab::new();
    lab.ok(&["keygen"]);
    let pk: PublicKey = lab.read("keys/public.json");
    let sk: PrivateKey = lab.read("keys/private.json");
    assert_eq!(pk.bits(), 1024);
    assert_eq!(sk.public_key(), pk);
    let m = paillier::Plaintext(BigUint::from(12345u32));
    let c = paillier::encrypt(&pk, &m, &mut ppba::OsRandom).unwrap();
    assert_eq!(paillier::decrypt(&sk, &c).unwrap(), m);
}

#[test]
fn keygen_rejects_bad_bits() {
    let lab = Lab::new();
    let out = lab.run(&["keygen", "--bits", "63"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bits"));
    assert!(!lab.path("keys").exists());
    assert_eq!(lab.run(&["keygen", "--bits", "62"]).status.code(), Some(2));
}

#[test]
fn seeded_keygen_is_reproducible() {
    let lab = Lab::new();
    lab.ok(&seeded(&["keygen", "--bits", "256", "--keys-dir", "a"], "9"));
    lab.ok(&seeded(&["keygen", "--bits", "256", "--keys-dir", "b"], "9"));
    for file in ["public.json", "private.json"] {
        assert_eq!(
            fs::read(lab.path(&format!("a/{file}"))).unwrap(),
            fs::read(lab.path(&format!("b/{file}"))).unwrap()
        );
    }
    lab.ok(&seeded(&["keygen", "--bits", "256", "--keys-dir", "c"], "10"));
    assert_ne!(
        fs::read(lab.path("a/public.json")).unwrap(),
        fs::read(lab.path("c/public.json")).unwrap()
    );
}

#[test]
fn seed_requires_explicit_opt_in() {
    let lab = Lab::new();
    assert_eq!(
        lab.run(&["keygen", "--bits", "64", "--seed", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        lab.run(&["keygen", "--bits", "64", "--insecure-seeded-rng"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn random_enrollment_decrypts_to_template_plus_key() {
    let lab = Lab::new();
    lab.ok(&seeded(&["keygen", "--bits", "256"], "1"));
    lab.ok(&seeded(&["enroll", "--random", "--t", "8"], "2"));
    let sk: PrivateKey = lab.read("keys/private.json");
    let enrollments: std::collections::BTreeMap<String, EnrollmentRecord> = lab.read("state/server/enrollments.json");
    let record = &enrollments["user-1"];
    let secrets: UserSecrets = lab.read("state/user/user-1.secrets.json");
    let a: FeatureVector = lab.read("state/harness/user-1.template.json");
    assert_eq!(record.c.len(), 8);
    for ((c, x), &a) in record.c.iter().zip(&secrets.x).zip(a.elements()) {
        let s = paillier::decrypt(&sk, c).unwrap().0;
        assert_eq!(s, (x + a) % sk.n());
    }
    // The server file holds ciphertexts only.
    let server_text = fs::read_to_string(lab.path("state/server/enrollments.json")).unwrap();
    for x in &secrets.x {
        assert!(!server_text.contains(&ppba::hexint::to_hex(x)));
    }
}

#[test]
fn toy_enrollment_matches_oracle() {
    let lab = Lab::new();
    lab.ok(&["keygen", "--toy-primes", "3,5"]);
    lab.ok(&["enroll", "--features", "3", "--bound", "15"]);
    let enrollments: std::collections::BTreeMap<String, EnrollmentRecord> = lab.read("state/server/enrollments.json");
    let secrets: UserSecrets = lab.read("state/user/user-1.secrets.json");
    let x = u64::try_from(&secrets.x[0]).unwrap();
    let r = u64::try_from(&secrets.r[0]).unwrap();
    // c = (1 + (3 + x) n) r^n mod n^2 with n = 15, by repeated multiplication.
    let r_pow = (0..15).fold(1u64, |acc, _| acc * r % 225);
    let want = (1 + ((3 + x) % 15) * 15) % 225 * r_pow % 225;
    assert_eq!(enrollments["user-1"].c[0].value(), &BigUint::from(want));
    let sk: PrivateKey = lab.read("keys/private.json");
    assert_eq!(
        paillier::decrypt(&sk, &enrollments["user-1"].c[0]).unwrap().0,
        BigUint::from((3 + x) % 15)
    );
}

#[test]
fn out_of_bound_feature_is_rejected() {
    let lab = Lab::new();
    lab.ok(&seeded(&["keygen", "--bits", "128"], "1"));
    let out = lab.run(&["enroll", "--features", "70000", "--bound", "65536"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!lab.path("state/server/enrollments.json").exists());
    lab.ok(&["enroll", "--features", "65535,2"]);
}

#[test]
fn enroll_without_keys_fails() {
    let lab = Lab::new();
    let out = lab.run(&["enroll", "--random"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("keygen"));
}

#[test]
fn run_curious_recovers_everything() {
    let lab = Lab::new();
    lab.ok(&seeded(&["keygen", "--bits", "512"], "1"));
    lab.ok(&seeded(&["enroll", "--random"], "2"));
    lab.ok(&seeded(
        &["run", "curious", "--features", "5,6,7,8,9,10,11,12", "--out", "r.json"],
        "3",
    ));
    let report = lab.json("r.json");
    schema_check(&report);
    assert_eq!(report["passed"], true);
    let attack = &report["attack_report"];
    assert_eq!(attack["verified"], true);
    let b: Vec<BigUint> = (5u32..=12).map(BigUint::from).collect();
    assert_eq!(hex_list(&attack["recovered_b"]), b);
    let a: FeatureVector = lab.read("state/harness/user-1.template.json");
    let want_a: Vec<BigUint> = a.elements().iter().map(|&v| BigUint::from(v)).collect();
    assert_eq!(hex_list(&attack["recovered_a"]), want_a);
    let secrets: UserSecrets = lab.read("state/user/user-1.secrets.json");
    let sk: PrivateKey = lab.read("keys/private.json");
    let want_x: Vec<BigUint> = secrets.x.iter().map(|x| x % sk.n()).collect();
    assert_eq!(hex_list(&attack["recovered_x_mod_n"]), want_x);
}

#[test]
fn run_mitm_omits_protected_quantities() {
    let lab = Lab::new();
    let out = lab.ok(&seeded(&["run", "mitm", "--random", "--bits", "512"], "4"));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    schema_check(&report);
    assert_eq!(report["passed"], true);
    assert_eq!(report["stealth"]["passed"], true);
    let attack = report["attack_report"].as_object().unwrap();
    assert!(!attack.contains_key("recovered_x_mod_n"));
    assert!(!attack.contains_key("recovered_a"));
    assert_eq!(attack["recovered_b"].as_array().unwrap().len(), 8);
}

#[test]
fn run_honest_with_huge_threshold_rejects() {
    let lab = Lab::new();
    let huge = "1".repeat(60);
    lab.ok(&seeded(
        &[
            "run",
            "honest",
            "--random",
            "--bits",
            "256",
            "--threshold",
            &huge,
            "--out",
            "r.json",
        ],
        "5",
    ));
    let report = lab.json("r.json");
    schema_check(&report);
    assert_eq!(report["decision"]["accepted"], false);
    assert_eq!(report["passed"], true);
}

#[test]
fn run_is_idempotent_under_a_seed() {
    let lab = Lab::new();
    for name in ["one", "two"] {
        let out = format!("{name}.json");
        let transcript = format!("{name}.jsonl");
        lab.ok(&seeded(
            &[
                "run",
                "curious",
                "--random",
                "--bits",
                "256",
                "--out",
                &out,
                "--transcript",
                &transcript,
            ],
            "6",
        ));
    }
    assert_eq!(
        fs::read(lab.path("one.json")).unwrap(),
        fs::read(lab.path("two.json")).unwrap()
    );
    assert_eq!(
        fs::read(lab.path("one.jsonl")).unwrap(),
        fs::read(lab.path("two.jsonl")).unwrap()
    );
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let lab = Lab::new();
    lab.ok(&seeded(&["keygen", "--bits", "256"], "1"));
    lab.ok(&seeded(&["enroll", "--random"], "2"));
    lab.ok(&seeded(
        &["run", "honest", "--transcript", "t.jsonl", "--out", "r.json"],
        "3",
    ));
    let out = lab.ok(&["replay", "--transcript", "t.jsonl"]);
    let decision: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(decision, lab.json("r.json")["decision"]);

    // Drop the round-3 message.
    let text = fs::read_to_string(lab.path("t.jsonl")).unwrap();
    let truncated: Vec<&str> = text.lines().filter(|l| !l.contains("\"round3\"")).collect();
    fs::write(lab.path("cut.jsonl"), truncated.join("\n")).unwrap();
    assert_eq!(lab.run(&["replay", "--transcript", "cut.jsonl"]).status.code(), Some(2));

    // Raise the recorded threshold so the recomputed decision disagrees.
    let lines: Vec<String> = text
        .lines()
        .map(|l| {
            if l.contains("\"outcome\"") {
                let mut v: Value = serde_json::from_str(l).unwrap();
                let t = &v["outcome"]["inner_product"].as_str().unwrap().to_owned();
                v["outcome"]["threshold"] = Value::String(t.clone());
                v["outcome"]["accepted"] = Value::Bool(false);
                v.to_string()
            } else {
                l.to_owned()
            }
        })
        .collect();
    fs::write(lab.path("lie.jsonl"), lines.join("\n")).unwrap();
    assert_eq!(lab.run(&["replay", "--transcript", "lie.jsonl"]).status.code(), Some(1));
}

#[test]
fn config_document_drives_run() {
    let lab = Lab::new();
    fs::write(
        lab.path("cfg.json"),
        r#"{"key_bits": 256, "t": 4, "feature_bound": 1024, "threshold": 0, "seed": 11, "user_id": "bob"}"#,
    )
    .unwrap();
    lab.ok(&[
        "run",
        "honest",
        "--random",
        "--config",
        "cfg.json",
        "--insecure-seeded-rng",
        "--out",
        "r.json",
    ]);
    let report = lab.json("r.json");
    assert_eq!(report["key_bits"], 256);
    assert_eq!(report["t"], 4);
    // A seed in the config still needs the opt-in flag.
    assert_eq!(
        lab.run(&["run", "honest", "--random", "--config", "cfg.json"])
            .status
            .code(),
        Some(2)
    );
    fs::write(lab.path("bad.json"), r#"{"key_bits": 256, "colour": 1}"#).unwrap();
    assert_eq!(
        lab.run(&["run", "honest", "--random", "--config", "bad.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn run_rejects_wrapping_parameters() {
    let lab = Lab::new();
    let out = lab.run(&[
        "run",
        "honest",
        "--random",
        "--bits",
        "64",
        "--t",
        "8",
        "--bound",
        "4294967296",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wrap"));
}

#[test]
fn schema_rejects_leaky_mitm_report() {
    let lab = Lab::new();
    let out = lab.ok(&seeded(&["run", "mitm", "--random", "--bits", "128"], "8"));
    let mut report: Value = serde_json::from_slice(&out.stdout).unwrap();
    report["attack_report"]["recovered_a"] = serde_json::json!(["1"]);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/scenario-result.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert!(!jsonschema::is_valid(&schema, &report));
}
