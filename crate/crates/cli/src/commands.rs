use std::path::Path;

use anyhow::{bail, Context, Result};
use num_bigint::BigUint;

use ppba::harness::streams::{ENROLL_STREAM, FEATURE_STREAM, KEYGEN_STREAM, SAMPLE_STREAM};
use ppba::harness::{self, run_with_setup, ScenarioKind, ScenarioResult, ScenarioSetup};
use ppba::paillier;
use ppba::protocol::{self, FeatureVector, UserSecrets};
use ppba::transcript::Transcript;

use crate::config::{self, RunConfig};
use crate::store::{self, KeyStore, StateStore};
use crate::{RngArgs, ScenarioArg};

pub fn keygen(bits: u64, toy_primes: Option<Vec<u64>>, rng: &RngArgs, keys_dir: &Path) -> Result<()> {
    let (pk, sk) = match toy_primes.as_deref() {
        Some(&[p, q]) => paillier::keygen_from_primes(&BigUint::from(p), &BigUint::from(q))?,
        Some(_) => bail!("--toy-primes takes exactly two primes"),
        None => {
            config::check_bits(bits)?;
            let seeds = config::rng_seeds(rng)?;
            paillier::keygen(bits, &mut seeds.stream(KEYGEN_STREAM))?
        }
    };
    let keys = KeyStore::new(keys_dir);
    keys.save(&pk, &sk)?;
    println!("{}", keys.public_path().display());
    println!("{}", keys.private_path().display());
    Ok(())
}

pub fn enroll(
    features: Option<Vec<u64>>,
    t: usize,
    bound: u64,
    user_id: &str,
    rng: &RngArgs,
    keys_dir: &Path,
    state_dir: &Path,
) -> Result<()> {
    let pk = KeyStore::new(keys_dir).load_public()?;
    let seeds = config::rng_seeds(rng)?;
    let template = match features {
        Some(values) => FeatureVector::new(values, bound).context("invalid --features")?,
        None => FeatureVector::random(t, 1, bound, &mut seeds.stream(FEATURE_STREAM))?,
    };
    let (secrets, record) = protocol::enroll(&pk, user_id, &template, &mut seeds.stream(ENROLL_STREAM))?;
    let state = StateStore::new(state_dir);
    state.save_enrollment(&record, &secrets, &template)?;
    println!("{}", state.enrollments_path().display());
    println!("{}", state.secrets_path(user_id).display());
    Ok(())
}

fn scenario_kind(arg: ScenarioArg) -> ScenarioKind {
    match arg {
        ScenarioArg::Honest => ScenarioKind::Honest,
        ScenarioArg::Curious => ScenarioKind::CuriousServer,
        ScenarioArg::Mitm => ScenarioKind::ActiveMitm,
    }
}

fn fresh_setup(cfg: &RunConfig) -> Result<ScenarioSetup> {
    let p = &cfg.params;
    config::check_bits(p.key_bits)?;
    config::check_shape(p.key_bits, p.t, p.feature_bound)?;
    let mut setup = ScenarioSetup::generate(p)?;
    setup.threshold = cfg.threshold.clone();
    if let Some(b) = &cfg.features {
        setup = setup.with_sample(FeatureVector::new(b.clone(), p.feature_bound)?)?;
    }
    Ok(setup)
}

fn stored_setup(cfg: &RunConfig, keys_dir: &Path, state_dir: &Path) -> Result<ScenarioSetup> {
    let p = &cfg.params;
    let sk = KeyStore::new(keys_dir).load_private()?;
    let pk = sk.public_key();
    let (record, secrets, template) = StateStore::new(state_dir).load_enrollment(&p.user_id)?;
    let secrets = UserSecrets::new(&pk, secrets.x, secrets.r).context("stored user secrets are invalid")?;
    if let Some(i) = record.c.iter().position(|c| !pk.is_ciphertext_unit(c.value())) {
        bail!("stored enrollment ciphertext {i} is not a unit mod n^2");
    }
    let t = record.c.len();
    if cfg.explicit_t && p.t != t {
        bail!("requested t = {} but {:?} is enrolled with t = {t}", p.t, p.user_id);
    }
    protocol::check_no_wrap(&pk, t, p.feature_bound)?;
    let seeds = cfg.seeds()?;
    let sampled = match &cfg.features {
        Some(b) => FeatureVector::new(b.clone(), p.feature_bound)?,
        None => FeatureVector::random(t, 1, p.feature_bound, &mut seeds.stream(SAMPLE_STREAM))?,
    };
    Ok(ScenarioSetup::from_parts(
        sk,
        record,
        secrets,
        template,
        sampled,
        cfg.threshold.clone(),
        seeds,
    )?)
}

fn explain_failure(result: &ScenarioResult) {
    if let Some(e) = &result.error {
        eprintln!("scenario failed: {e}");
        return;
    }
    if let Some(report) = &result.attack_report {
        if !report.verified {
            eprintln!("attack output does not match ground truth");
        }
        for flag in &report.flags {
            eprintln!("  unrecoverable {:?}[{}]: {}", flag.quantity, flag.index, flag.reason);
        }
    }
    if let Some(stealth) = result.stealth.as_ref().filter(|s| !s.passed) {
        eprintln!("stealth check failed: {stealth:?}");
    }
    if let Some(audit) = result.knowledge_boundary.as_ref().filter(|a| !a.holds()) {
        eprintln!("knowledge boundary violated: {audit:?}");
    }
}

pub fn run(
    scenario: ScenarioArg,
    random: bool,
    cfg: &RunConfig,
    keys_dir: &Path,
    state_dir: &Path,
    out: Option<&Path>,
    transcript_path: Option<&Path>,
) -> Result<bool> {
    let setup = if random {
        fresh_setup(cfg)?
    } else {
        stored_setup(cfg, keys_dir, state_dir)?
    };
    let result = run_with_setup(scenario_kind(scenario), &setup);

    if let (Some(path), Some(t)) = (transcript_path, &result.transcript) {
        store::write_text(path, &t.to_jsonl())?;
    }
    let mut report = result.to_json_pretty();
    report.push('\n');
    match out {
        Some(path) => store::write_text(path, &report)?,
        None => print!("{report}"),
    }
    if !result.passed {
        explain_failure(&result);
    }
    Ok(result.passed)
}

pub fn replay(transcript_path: &Path, keys_dir: &Path, out: Option<&Path>) -> Result<bool> {
    let text =
        std::fs::read_to_string(transcript_path).with_context(|| format!("reading {}", transcript_path.display()))?;
    let transcript = Transcript::from_jsonl(&text).with_context(|| format!("parsing {}", transcript_path.display()))?;
    let sk = KeyStore::new(keys_dir).load_private()?;
    let decision = harness::replay(&transcript, &sk)?;
    let mut json = serde_json::to_string_pretty(&decision)?;
    json.push('\n');
    match out {
        Some(path) => store::write_text(path, &json)?,
        None => print!("{json}"),
    }
    let matches = transcript.outcome() == Some(&decision);
    if !matches {
        eprintln!("replayed decision differs from the recorded outcome");
    }
    Ok(matches)
}
