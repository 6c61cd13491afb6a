use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use realstab::robust::Certificate;

use crate::schema::VERSION_TAG;
use crate::{CliError, Output};

/// Machine-readable outcome of one command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of each input file, in argument order.
    pub input_sha256: Vec<String>,
    pub certificate: Certificate,
    /// Command-specific results.
    pub details: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_input(path: &Path) -> Result<(String, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::missing(format!("cannot read {}: {e}", path.display())))?;
    let hash = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|_| CliError::parse(format!("{} is not UTF-8", path.display())))?;
    Ok((text, hash))
}

pub fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::new(crate::exit::NO_INPUT, format!("cannot write {}: {e}", path.display())))
}

impl Report {
    pub fn new(
        command: &str,
        input_sha256: Vec<String>,
        certificate: Certificate,
        details: impl Serialize,
        started: Instant,
        output: &Output,
    ) -> Self {
        Report {
            version: VERSION_TAG.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            input_sha256,
            certificate,
            details: serde_json::to_value(details).expect("serializable details"),
            elapsed_ms: output.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report") + "\n"
    }

    /// Writes the report file if requested, then prints either the JSON or
    /// the human-readable summary.
    pub fn emit(&self, output: &Output, summary: &str) -> Result<(), CliError> {
        let json = self.to_json();
        if let Some(path) = &output.report {
            write_output(path, &json)?;
        }
        if output.json {
            print!("{json}");
        } else {
            print!("{summary}");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use realstab::ratfun::StabilityVerdict;
    use realstab::robust::CertificateKind;

    #[test]
    fn report_round_trips() {
        let output = Output {
            report: None,
            json: true,
            timing: true,
        };
        let cert = Certificate::small_gain(
            CertificateKind::SmallGainIop,
            f64::INFINITY,
            StabilityVerdict::stable(),
            "cor3",
        );
        let r = Report::new(
            "margin",
            vec![sha256_hex(b"x")],
            cert,
            serde_json::json!({"norm": 0.1}),
            Instant::now(),
            &output,
        );
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.elapsed_ms.is_some());
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
