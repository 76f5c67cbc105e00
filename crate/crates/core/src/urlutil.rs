use url::Url;

use crate::error::{Error, Result};

/// Parses a URL that may omit its scheme (`john.blitzer.com`), as search
/// engines often display them. Only http(s) URLs with a host are accepted.
pub fn parse_lenient(raw: &str) -> Result<Url> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::invalid_url(raw, "empty"));
    }
    let candidate = if trimmed.contains("://") {
        trimmed.to_string()
    } else {
        format!("http://{trimmed}")
    };
    let url = Url::parse(&candidate).map_err(|e| Error::invalid_url(raw, e.to_string()))?;
    require_http_host(raw, url)
}

pub(crate) fn require_http_host(raw: &str, url: Url) -> Result<Url> {
    if !matches!(url.scheme(), "http" | "https") {
        return Err(Error::invalid_url(raw, format!("unsupported scheme `{}`", url.scheme())));
    }
    match url.host_str() {
        Some(h) if !h.is_empty() => Ok(url),
        _ => Err(Error::invalid_url(raw, "missing host")),
    }
}

/// Last DNS label of the host (`edu`, `org`, `de`); IP hosts map to `ip`.
pub fn top_level_domain(url: &Url) -> String {
    match url.host() {
        Some(url::Host::Domain(d)) => d
            .trim_end_matches('.')
            .rsplit('.')
            .next()
            .unwrap_or("")
            .to_lowercase(),
        Some(_) => "ip".to_string(),
        None => String::new(),
    }
}

/// Host suffix one label below the public suffix (`cse.unsw.edu.au` ->
/// `unsw.edu.au`). Hosts without a known suffix map to themselves.
pub fn registrable_domain(url: &Url) -> Option<String> {
    let host = url.host_str()?.trim_end_matches('.').to_lowercase();
    if let Some(url::Host::Domain(_)) = url.host() {
        if let Some(d) = psl::domain(host.as_bytes()) {
            if d.suffix().is_known() {
                if let Ok(s) = std::str::from_utf8(d.as_bytes()) {
                    return Some(s.to_string());
                }
            }
        }
    }
    Some(host)
}
