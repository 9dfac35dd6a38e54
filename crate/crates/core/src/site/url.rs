//! URL canonicalization used for page identity.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use url::Url;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid url {url:?}: {reason}")]
pub struct UrlError {
    pub url: String,
    pub reason: String,
}

/// Resolve `url` against `base` and canonicalize: fragment dropped, query parameters sorted,
/// host lowercased, trailing slash removed from non-root paths.
pub fn canonicalize(url: &str, base: Option<&str>) -> Result<String, UrlError> {
    let err = |reason: String| UrlError { url: url.to_string(), reason };
    let mut parsed = match base {
        Some(b) => {
            let base = Url::parse(b).map_err(|e| err(e.to_string()))?;
            base.join(url.trim()).map_err(|e| err(e.to_string()))?
        }
        None => Url::parse(url.trim()).map_err(|e| err(e.to_string()))?,
    };
    parsed.set_fragment(None);
    if let Some(query) = parsed.query() {
        let mut pairs: Vec<&str> = query.split('&').filter(|p| !p.is_empty()).collect();
        pairs.sort_by(|a, b| {
            let key = |p: &str| p.split_once('=').map(|(k, _)| k.to_string()).unwrap_or_else(|| p.to_string());
            key(a).cmp(&key(b)).then_with(|| a.cmp(b))
        });
        let joined = pairs.join("&");
        parsed.set_query(if joined.is_empty() { None } else { Some(&joined) });
    }
    let path = parsed.path().to_string();
    if path.len() > 1 && path.ends_with('/') {
        parsed.set_path(path.trim_end_matches('/'));
        if parsed.path().is_empty() {
            parsed.set_path("/");
        }
    }
    Ok(parsed.to_string())
}

pub fn same_origin(a: &str, b: &str) -> bool {
    match (Url::parse(a), Url::parse(b)) {
        (Ok(a), Ok(b)) => a.origin() == b.origin(),
        _ => false,
    }
}

/// Whether the URL uses a scheme a crawler can follow.
pub fn is_web_url(url: &str) -> bool {
    Url::parse(url).is_ok_and(|u| matches!(u.scheme(), "http" | "https"))
}

/// Path plus query of an absolute URL, for display.
pub fn path_of(url: &str) -> String {
    match Url::parse(url) {
        Ok(u) => match u.query() {
            Some(q) => alloc::format!("{}?{}", u.path(), q),
            None => u.path().to_string(),
        },
        Err(_) => url.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(canonicalize("HTTP://Example.COM/a/?b=2&a=1#frag", None).unwrap(), "http://example.com/a?a=1&b=2");
        assert_eq!(canonicalize("http://example.com", None).unwrap(), "http://example.com/");
        assert_eq!(canonicalize("../c", Some("http://x.test/a/b/")).unwrap(), "http://x.test/a/c");
        assert_eq!(canonicalize("#top", Some("http://x.test/p")).unwrap(), "http://x.test/p");
        assert!(canonicalize("not a url", None).is_err());
    }

    #[test]
    fn origins() {
        assert!(same_origin("http://a.test/x", "http://A.test/y?z"));
        assert!(!same_origin("http://a.test/", "https://a.test/"));
        assert!(!is_web_url("mailto:a@b.c"));
    }
}
