use std::path::Path;

use reqwest::blocking::{Client, RequestBuilder};
use serde_json::Value;

use crate::output::{print, table};
use crate::Format;

pub struct Remote {
    base: String,
    roles: Vec<String>,
    format: Format,
    client: Client,
}

/// Percent-encodes a query parameter value.
fn encode(value: &str) -> String {
    let mut out = String::new();
    for b in value.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~:".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn query_string(params: &[(&str, Option<String>)]) -> String {
    let parts: Vec<String> = params
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| format!("{k}={}", encode(v))))
        .collect();
    if parts.is_empty() {
        String::new()
    } else {
        format!("?{}", parts.join("&"))
    }
}

fn exit_code(status: u16) -> u8 {
    match status {
        200..=299 => 0,
        400..=499 => 1,
        _ => 2,
    }
}

fn print_diagnostics(origin: &str, diags: &Value) {
    for d in diags.as_array().into_iter().flatten() {
        eprintln!(
            "{origin}:{}:{}: {}[{}]: {}",
            d["line"],
            d["column"],
            d["severity"].as_str().unwrap_or("error"),
            d["code"].as_str().unwrap_or("?"),
            d["message"].as_str().unwrap_or("")
        );
    }
}

impl Remote {
    pub fn new(base: &str, roles: Vec<String>, format: Format) -> Self {
        Self {
            base: base.trim_end_matches('/').to_owned(),
            roles,
            format,
            client: Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    /// Sends a request and decodes the body. Failures are reported on
    /// stderr and turned into the exit code.
    fn send(&self, request: RequestBuilder) -> Result<(u16, Value), u8> {
        let request = if self.roles.is_empty() {
            request
        } else {
            request.header("X-NIM-Principals", self.roles.join(","))
        };
        let response = request.send().map_err(|e| {
            eprintln!("cannot reach {}: {e}", self.base);
            3
        })?;
        let status = response.status().as_u16();
        let text = response.text().unwrap_or_default();
        let body = serde_json::from_str(&text).unwrap_or(Value::String(text));
        Ok((status, body))
    }

    /// Reports an error response unless it is a success.
    fn check(&self, status: u16, body: &Value) -> Option<u8> {
        if exit_code(status) == 0 {
            return None;
        }
        match body.get("error") {
            Some(Value::String(m)) => eprintln!("error ({status}): {m}"),
            _ => eprintln!("error ({status}): {body}"),
        }
        Some(exit_code(status))
    }

    fn run(&self, request: RequestBuilder, on_success: impl FnOnce(&Value)) -> u8 {
        match self.send(request) {
            Err(code) => code,
            Ok((status, body)) => match self.check(status, &body) {
                Some(code) => code,
                None => {
                    on_success(&body);
                    0
                }
            },
        }
    }

    pub fn register(&self, file: &Path, source: &str) -> u8 {
        let request = self.client.post(self.url("/v1/models")).body(source.to_owned());
        let (status, body) = match self.send(request) {
            Ok(r) => r,
            Err(code) => return code,
        };
        let origin = file.display().to_string();
        if body.get("status").and_then(Value::as_str) == Some("rejected") {
            print_diagnostics(&origin, &body["diagnostics"]);
            return exit_code(status);
        }
        if let Some(code) = self.check(status, &body) {
            return code;
        }
        print_diagnostics(&origin, &body["diagnostics"]);
        print(self.format, &body, |b| {
            let mut out = format!("accepted {}\n", b["modelId"].as_str().unwrap_or("?"));
            for e in b["endpoints"].as_array().into_iter().flatten() {
                out.push_str(&format!(
                    "  {} {}\n",
                    e["method"].as_str().unwrap_or(""),
                    e["path"].as_str().unwrap_or("")
                ));
            }
            out
        });
        0
    }

    pub fn ingest(&self, type_name: &str, document: &[u8]) -> u8 {
        let request = self
            .client
            .post(self.url(&format!("/v1/types/{type_name}/instances")))
            .header("Content-Type", "application/json")
            .body(document.to_vec());
        self.run(request, |body| {
            print(self.format, body, |b| {
                format!("{}\n", b["instanceId"].as_str().unwrap_or("?"))
            })
        })
    }

    pub fn query(&self, type_name: &str, at: Option<&str>) -> u8 {
        let path = format!(
            "/v1/types/{type_name}/instances{}",
            query_string(&[("at", at.map(String::from))])
        );
        self.run(self.client.get(self.url(&path)), |body| {
            print(self.format, body, |b| {
                table(b.as_array().map(Vec::as_slice).unwrap_or_default(), &["@id"])
            })
        })
    }

    pub fn history(
        &self,
        type_name: &str,
        instance: &str,
        field: &str,
        from: Option<String>,
        to: Option<String>,
        at: Option<String>,
    ) -> u8 {
        let path = format!(
            "/v1/types/{type_name}/instances/{instance}/entries/{field}/history{}",
            query_string(&[("from", from), ("to", to), ("at", at)])
        );
        self.run(self.client.get(self.url(&path)), |body| {
            print(self.format, body, |b| {
                table(
                    b["values"].as_array().map(Vec::as_slice).unwrap_or_default(),
                    &["timestamp", "value", "expiry"],
                )
            })
        })
    }

    pub fn purge(&self) -> u8 {
        self.run(self.client.post(self.url("/v1/admin/purge")), |body| {
            print(self.format, body, |b| format!("deleted {}\n", b["deleted"]))
        })
    }
}
