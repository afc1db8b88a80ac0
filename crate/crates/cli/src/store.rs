//! On-disk layout.
//!
//! ```text
//! <keys-dir>/public.json
//! <keys-dir>/private.json
//! <state-dir>/server/enrollments.json           user_id -> EnrollmentRecord
//! <state-dir>/user/<user_id>.secrets.json       UserSecrets
//! <state-dir>/harness/<user_id>.template.json   enrolled template a
//! ```
//!
//! Server, user and harness data never share a file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use ppba::protocol::{EnrollmentRecord, FeatureVector, UserSecrets};
use ppba::{PrivateKey, PublicKey};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn check_user_id(user_id: &str) -> Result<()> {
    let ok = !user_id.is_empty()
        && user_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !user_id.starts_with('.');
    if !ok {
        bail!("user id {user_id:?} must be non-empty ASCII letters, digits, '-', '_' or '.'");
    }
    Ok(())
}

pub struct KeyStore {
    dir: PathBuf,
}

impl KeyStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        KeyStore { dir: dir.into() }
    }

    pub fn public_path(&self) -> PathBuf {
        self.dir.join("public.json")
    }

    pub fn private_path(&self) -> PathBuf {
        self.dir.join("private.json")
    }

    pub fn save(&self, pk: &PublicKey, sk: &PrivateKey) -> Result<()> {
        write_json(&self.public_path(), pk)?;
        write_json(&self.private_path(), sk)
    }

    pub fn load_private(&self) -> Result<PrivateKey> {
        let sk: PrivateKey = read_json(&self.private_path()).context("private key missing; run `ppba keygen` first")?;
        let pk: PublicKey = read_json(&self.public_path()).context("public key missing; run `ppba keygen` first")?;
        if pk != sk.public_key() {
            bail!(
                "{} and {} belong to different keys",
                self.public_path().display(),
                self.private_path().display()
            );
        }
        Ok(sk)
    }

    pub fn load_public(&self) -> Result<PublicKey> {
        read_json(&self.public_path()).context("public key missing; run `ppba keygen` first")
    }
}

pub struct StateStore {
    dir: PathBuf,
}

impl StateStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        StateStore { dir: dir.into() }
    }

    pub fn enrollments_path(&self) -> PathBuf {
        self.dir.join("server").join("enrollments.json")
    }

    pub fn secrets_path(&self, user_id: &str) -> PathBuf {
        self.dir.join("user").join(format!("{user_id}.secrets.json"))
    }

    pub fn template_path(&self, user_id: &str) -> PathBuf {
        self.dir.join("harness").join(format!("{user_id}.template.json"))
    }

    fn enrollments(&self) -> Result<BTreeMap<String, EnrollmentRecord>> {
        let path = self.enrollments_path();
        if path.exists() {
            read_json(&path)
        } else {
            Ok(BTreeMap::new())
        }
    }

    pub fn save_enrollment(
        &self,
        record: &EnrollmentRecord,
        secrets: &UserSecrets,
        template: &FeatureVector,
    ) -> Result<()> {
        check_user_id(&record.user_id)?;
        let mut all = self.enrollments()?;
        all.insert(record.user_id.clone(), record.clone());
        write_json(&self.enrollments_path(), &all)?;
        write_json(&self.secrets_path(&record.user_id), secrets)?;
        write_json(&self.template_path(&record.user_id), template)
    }

    pub fn load_enrollment(&self, user_id: &str) -> Result<(EnrollmentRecord, UserSecrets, FeatureVector)> {
        check_user_id(user_id)?;
        let record = self
            .enrollments()?
            .remove(user_id)
            .with_context(|| format!("no enrollment for {user_id:?}; run `ppba enroll` first"))?;
        let secrets = read_json(&self.secrets_path(user_id))?;
        let template = read_json(&self.template_path(user_id))?;
        Ok((record, secrets, template))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn user_ids_are_path_safe() {
        assert!(check_user_id("alice-01").is_ok());
        assert!(check_user_id("").is_err());
        assert!(check_user_id("../x").is_err());
        assert!(check_user_id(".hidden").is_err());
    }
}
