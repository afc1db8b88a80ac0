use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::channel::{Channel, Interposer};
use super::streams::{
    ADVERSARY_STREAM, ENROLL_STREAM, FEATURE_STREAM, KEYGEN_STREAM, SAMPLE_STREAM, SERVER_STREAM, USER_STREAM,
};
use super::{ground_truth_compare, HarnessError, HiddenTruth};
use crate::attacks::{self, AttackReport, CuriousServerView, MitmState};
use crate::paillier::{self, PrivateKey, PublicKey};
use crate::protocol::{
    self, Decision, EnrollmentRecord, FeatureVector, MessageKind, ProtocolMessage, Round3Message, ServerSession,
    UserSecrets, DEFAULT_FEATURE_BOUND, DEFAULT_VECTOR_LEN,
};
use crate::rng::{PartyRng, SeedMaterial};
use crate::transcript::{Direction, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Honest,
    CuriousServer,
    ActiveMitm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub key_bits: u64,
    pub t: usize,
    pub feature_bound: u64,
    pub threshold: u64,
    pub seed: Option<u64>,
    pub user_id: String,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            key_bits: 1024,
            t: DEFAULT_VECTOR_LEN,
            feature_bound: DEFAULT_FEATURE_BOUND,
            threshold: 0,
            seed: None,
            user_id: "user-1".into(),
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.key_bits < 16 || !self.key_bits.is_multiple_of(2) {
            return Err(HarnessError::Config(format!(
                "key_bits must be even and at least 16, got {}",
                self.key_bits
            )));
        }
        if self.t == 0 {
            return Err(HarnessError::Config("t must be at least 1".into()));
        }
        if self.feature_bound < 2 {
            return Err(HarnessError::Config("feature_bound must be at least 2".into()));
        }
        // n has exactly key_bits bits, so n ≥ 2^(key_bits - 1).
        let worst = BigUint::from(self.t) * BigUint::from(self.feature_bound).pow(2);
        if worst >= BigUint::from(1u32) << (self.key_bits - 1) {
            return Err(HarnessError::Config(
                "t * feature_bound^2 must be below 2^(key_bits - 1) so inner products cannot wrap mod n".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a scenario needs, split by owner.
#[derive(Debug, Clone)]
pub struct ScenarioSetup {
    pub pk: PublicKey,
    /// AS only.
    pub sk: PrivateKey,
    /// AS only.
    pub record: EnrollmentRecord,
    /// User device only.
    pub secrets: UserSecrets,
    /// User device only.
    pub sampled: FeatureVector,
    pub threshold: BigUint,
    /// Harness only; never handed to an attack.
    pub truth: HiddenTruth,
    seeds: SeedMaterial,
}

impl ScenarioSetup {
    /// Fresh keys, template, enrollment and sample from `params`.
    pub fn generate(params: &ScenarioParams) -> Result<Self, HarnessError> {
        params.validate()?;
        let seeds = SeedMaterial::from_optional_seed(params.seed);
        let (pk, sk) = paillier::keygen(params.key_bits, &mut seeds.stream(KEYGEN_STREAM))?;
        let a = FeatureVector::random(params.t, 1, params.feature_bound, &mut seeds.stream(FEATURE_STREAM))?;
        let b = FeatureVector::random(params.t, 1, params.feature_bound, &mut seeds.stream(SAMPLE_STREAM))?;
        let (secrets, record) = protocol::enroll(&pk, &params.user_id, &a, &mut seeds.stream(ENROLL_STREAM))?;
        ScenarioSetup::from_parts(sk, record, secrets, a, b, BigUint::from(params.threshold), seeds)
    }

    /// Setup from existing key material and enrollment.
    pub fn from_parts(
        sk: PrivateKey,
        record: EnrollmentRecord,
        secrets: UserSecrets,
        template: FeatureVector,
        sampled: FeatureVector,
        threshold: BigUint,
        seeds: SeedMaterial,
    ) -> Result<Self, HarnessError> {
        let t = record.c.len();
        if secrets.len() != t || template.len() != t || sampled.len() != t {
            return Err(HarnessError::Config(format!(
                "inconsistent vector lengths: record {t}, secrets {}, template {}, sample {}",
                secrets.len(),
                template.len(),
                sampled.len()
            )));
        }
        let pk = sk.public_key();
        let truth = HiddenTruth {
            a: template,
            b: sampled.clone(),
            x: secrets.x.clone(),
        };
        Ok(ScenarioSetup {
            pk,
            sk,
            record,
            secrets,
            sampled,
            threshold,
            truth,
            seeds,
        })
    }

    /// Replace the authentication-time sample `b`.
    pub fn with_sample(mut self, b: FeatureVector) -> Result<Self, HarnessError> {
        if b.len() != self.record.c.len() {
            return Err(HarnessError::Config(format!(
                "sample has {} features, enrollment has {}",
                b.len(),
                self.record.c.len()
            )));
        }
        self.truth.b = b.clone();
        self.sampled = b;
        Ok(self)
    }

    fn user_rng(&self) -> PartyRng {
        self.seeds.stream(USER_STREAM)
    }

    fn server_rng(&self) -> PartyRng {
        self.seeds.stream(SERVER_STREAM)
    }
}

/// Result of the MitM counterfactual comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StealthCheck {
    /// Every message the AS received is byte-identical to the honest run.
    pub server_messages_identical: bool,
    pub decision_identical: bool,
    pub server_ephemerals_identical: bool,
    pub passed: bool,
}

/// Runtime knowledge-boundary checks: no value the adversary handled is one
/// it must not know.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeAudit {
    /// Curious AS: no element of the view equals a user secret `x_j` or `r_j`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub server_view_free_of_user_secrets: Option<bool>,
    /// MitM: no observed or forged value equals `λ` or `μ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary_view_free_of_private_key: Option<bool>,
}

impl KnowledgeAudit {
    pub fn holds(&self) -> bool {
        self.server_view_free_of_user_secrets != Some(false) && self.adversary_view_free_of_private_key != Some(false)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: ScenarioKind,
    pub key_bits: u64,
    pub t: usize,
    pub decision: Option<Decision>,
    pub attack_report: Option<AttackReport>,
    pub stealth: Option<StealthCheck>,
    pub knowledge_boundary: Option<KnowledgeAudit>,
    pub error: Option<String>,
    pub passed: bool,
    /// Messages as delivered in the run itself.
    #[serde(skip)]
    pub transcript: Option<Transcript>,
    /// The honest run the MitM scenario is compared against.
    #[serde(skip)]
    pub counterfactual: Option<Transcript>,
}

impl ScenarioResult {
    fn empty(kind: ScenarioKind, key_bits: u64, t: usize) -> Self {
        ScenarioResult {
            scenario: kind,
            key_bits,
            t,
            decision: None,
            attack_report: None,
            stealth: None,
            knowledge_boundary: None,
            error: None,
            passed: false,
            transcript: None,
            counterfactual: None,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Interposer realizing the active attack on the link between user and AS.
pub struct MitmInterposer {
    pk: PublicKey,
    rng: PartyRng,
    state: Option<MitmState>,
    fault: Option<FeatureVector>,
    observed: Vec<BigUint>,
}

impl MitmInterposer {
    pub fn new(pk: PublicKey, rng: PartyRng) -> Self {
        MitmInterposer {
            pk,
            rng,
            state: None,
            fault: None,
            observed: Vec::new(),
        }
    }

    /// Negative control: forward `c'^wrong_b` instead of the recovered `b`.
    pub fn with_fault(mut self, wrong_b: FeatureVector) -> Self {
        self.fault = Some(wrong_b);
        self
    }

    pub fn state(&self) -> Option<&MitmState> {
        self.state.as_ref()
    }

    fn forge(&mut self, message: ProtocolMessage) -> Result<ProtocolMessage, HarnessError> {
        let c_prime = message.to_round2()?;
        let (forged, mut state) = attacks::mitm_forge_round2(&self.pk, c_prime.c_prime.len(), &mut self.rng)?;
        state.intercept(c_prime)?;
        self.observed.extend(state.r_double_prime().iter().cloned());
        self.observed.extend(forged.c_prime.iter().cloned());
        self.state = Some(state);
        Ok(ProtocolMessage::round2(&message.user_id, forged))
    }

    fn cover(&mut self, message: ProtocolMessage) -> Result<ProtocolMessage, HarnessError> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| HarnessError::State("round 3 seen before round 2".into()))?;
        attacks::mitm_recover_b(state, &message.to_round3()?)?;
        if let Some(wrong) = self.fault.take() {
            state.overwrite_recovered_b(wrong);
        }
        let c_prime = state
            .intercepted_c_prime()
            .cloned()
            .ok_or_else(|| HarnessError::State("no intercepted round-2 message".into()))?;
        let cover = attacks::mitm_cover_forward(state, &c_prime)?;
        self.observed.extend(cover.d.iter().cloned());
        Ok(ProtocolMessage::round3(&message.user_id, cover))
    }
}

impl Interposer for MitmInterposer {
    fn intercept(&mut self, direction: Direction, message: ProtocolMessage) -> Result<ProtocolMessage, HarnessError> {
        self.observed.extend(message.payload.iter().cloned());
        match (direction, message.kind) {
            (Direction::ServerToUser, MessageKind::Round2) => self.forge(message),
            (Direction::UserToServer, MessageKind::Round3) => self.cover(message),
            _ => Ok(message),
        }
    }
}

struct SessionOutcome {
    decision: Decision,
    transcript: Transcript,
    session: ServerSession,
    record: EnrollmentRecord,
    round3: Round3Message,
}

/// One enrollment upload plus one authentication, all over a [`Channel`].
fn execute_session(
    setup: &ScenarioSetup,
    interposer: Option<&mut dyn Interposer>,
) -> Result<SessionOutcome, HarnessError> {
    let mut user_rng = setup.user_rng();
    let mut server_rng = setup.server_rng();
    let pk = &setup.pk;
    let user_id = setup.record.user_id.as_str();

    let mut channel = Channel::new(format!("{user_id}/session-1"));
    if let Some(i) = interposer {
        channel.install_interposer(i)?;
    }

    channel.send(Direction::UserToServer, &ProtocolMessage::enroll(setup.record.clone()))?;
    let record = channel.receive(Direction::UserToServer)?.to_enrollment(pk)?;

    let (m1, user_state) = protocol::user_round1(pk, &setup.secrets, &setup.sampled, &mut user_rng)?;
    channel.send(Direction::UserToServer, &ProtocolMessage::round1(user_id, m1))?;
    let m1 = channel.receive(Direction::UserToServer)?.to_round1()?;

    let (m2, mut session) = protocol::server_round2(pk, &setup.sk, &record, &m1, &mut server_rng)?;
    channel.send(Direction::ServerToUser, &ProtocolMessage::round2(user_id, m2))?;
    let m2 = channel.receive(Direction::ServerToUser)?.to_round2()?;

    let m3 = protocol::user_round3(&user_state, &m2)?;
    channel.send(Direction::UserToServer, &ProtocolMessage::round3(user_id, m3))?;
    let m3 = channel.receive(Direction::UserToServer)?.to_round3()?;

    let decision = protocol::server_decide(&setup.sk, &mut session, &m3, &setup.threshold)?;
    let mut transcript = channel.into_transcript();
    transcript.set_server_ephemerals(session.r_prime().to_vec());
    transcript.set_outcome(decision.clone());
    Ok(SessionOutcome {
        decision,
        transcript,
        session,
        record,
        round3: m3,
    })
}

fn server_view_is_clean(view: &CuriousServerView, secrets: &UserSecrets) -> bool {
    let forbidden: Vec<&BigUint> = secrets.x.iter().chain(&secrets.r).collect();
    let seen = view
        .record
        .c
        .iter()
        .map(|c| c.value())
        .chain(&view.round1.c_star)
        .chain(&view.round3.d)
        .chain(&view.r_prime);
    seen.into_iter().all(|v| !forbidden.contains(&v))
}

fn adversary_view_is_clean(observed: &[BigUint], sk: &PrivateKey) -> bool {
    observed.iter().all(|v| v != sk.lambda() && v != sk.mu())
}

/// Run one scenario on prepared material. Failures end up in
/// [`ScenarioResult::error`] rather than being returned.
pub fn run_with_setup(kind: ScenarioKind, setup: &ScenarioSetup) -> ScenarioResult {
    let mut result = ScenarioResult::empty(kind, setup.pk.bits(), setup.record.c.len());
    if let Err(e) = run_into(kind, setup, &mut result) {
        result.error = Some(e.to_string());
        result.passed = false;
    }
    result
}

fn run_into(kind: ScenarioKind, setup: &ScenarioSetup, result: &mut ScenarioResult) -> Result<(), HarnessError> {
    match kind {
        ScenarioKind::Honest => {
            let out = execute_session(setup, None)?;
            result.decision = Some(out.decision);
            result.transcript = Some(out.transcript);
            result.passed = true;
        }
        ScenarioKind::CuriousServer => {
            let out = execute_session(setup, None)?;
            let view = CuriousServerView::from_session(&setup.sk, &out.record, &out.session, &out.round3);
            let audit = KnowledgeAudit {
                server_view_free_of_user_secrets: Some(server_view_is_clean(&view, &setup.secrets)),
                adversary_view_free_of_private_key: None,
            };
            let mut report = attacks::curious_server_attack(&view)?;
            report.verified = ground_truth_compare(&report, &setup.truth, setup.pk.n());
            result.passed = report.verified && audit.holds();
            result.decision = Some(out.decision);
            result.attack_report = Some(report);
            result.knowledge_boundary = Some(audit);
            result.transcript = Some(out.transcript);
        }
        ScenarioKind::ActiveMitm => {
            let mut mitm = MitmInterposer::new(setup.pk.clone(), setup.seeds.stream(ADVERSARY_STREAM));
            let attacked = execute_session(setup, Some(&mut mitm))?;
            let honest = execute_session(setup, None)?;
            let stealth = compare_server_views(&attacked, &honest);
            let mut report = mitm
                .state()
                .map(MitmState::report)
                .ok_or_else(|| HarnessError::State("adversary never saw round 2".into()))?;
            report.verified = ground_truth_compare(&report, &setup.truth, setup.pk.n());
            let audit = KnowledgeAudit {
                server_view_free_of_user_secrets: None,
                adversary_view_free_of_private_key: Some(adversary_view_is_clean(&mitm.observed, &setup.sk)),
            };
            result.passed = report.verified && stealth.passed && audit.holds();
            result.decision = Some(attacked.decision);
            result.attack_report = Some(report);
            result.stealth = Some(stealth);
            result.knowledge_boundary = Some(audit);
            result.transcript = Some(attacked.transcript);
            result.counterfactual = Some(honest.transcript);
        }
    }
    Ok(())
}

fn compare_server_views(attacked: &SessionOutcome, honest: &SessionOutcome) -> StealthCheck {
    let to_server =
        |t: &Transcript| -> Vec<String> { t.delivered(Direction::UserToServer).map(|e| e.raw.clone()).collect() };
    let server_messages_identical = to_server(&attacked.transcript) == to_server(&honest.transcript);
    let decision_identical = attacked.decision == honest.decision;
    let server_ephemerals_identical = attacked.session.r_prime() == honest.session.r_prime();
    StealthCheck {
        server_messages_identical,
        decision_identical,
        server_ephemerals_identical,
        passed: server_messages_identical && decision_identical && server_ephemerals_identical,
    }
}

/// Generate material from `params` and run `kind`.
pub fn run_scenario(kind: ScenarioKind, params: &ScenarioParams) -> ScenarioResult {
    match ScenarioSetup::generate(params) {
        Ok(setup) => run_with_setup(kind, &setup),
        Err(e) => {
            let mut result = ScenarioResult::empty(kind, params.key_bits, params.t);
            result.error = Some(e.to_string());
            result
        }
    }
}

/// Run with a fault-injecting MitM: the AS gets `c'^wrong_b`. Returns the
/// decision under attack and the honest counterfactual decision.
pub fn run_faulty_mitm(setup: &ScenarioSetup, wrong_b: FeatureVector) -> Result<(Decision, Decision), HarnessError> {
    let mut mitm = MitmInterposer::new(setup.pk.clone(), setup.seeds.stream(ADVERSARY_STREAM)).with_fault(wrong_b);
    let attacked = execute_session(setup, Some(&mut mitm))?;
    let honest = execute_session(setup, None)?;
    Ok((attacked.decision, honest.decision))
}

/// Honest session routed through an arbitrary interposer. Returns the transcript.
pub fn run_honest_through(
    setup: &ScenarioSetup,
    interposer: Option<&mut dyn Interposer>,
) -> Result<Transcript, HarnessError> {
    execute_session(setup, interposer).map(|o| o.transcript)
}
