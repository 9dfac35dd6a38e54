//! Blocking HTTP transport for the WebDriver client.

use std::time::Duration;

use formnav_core::browser::{HttpMethod, SessionConfig, Transport, TransportError, WebDriverSession};
use serde_json::Value;

pub struct HttpTransport {
    base: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(endpoint: &str, timeout_ms: u64) -> Result<HttpTransport, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .build()
            .map_err(|e| TransportError::Connection(e.to_string()))?;
        Ok(HttpTransport { base: endpoint.trim_end_matches('/').to_string(), client })
    }
}

impl Transport for HttpTransport {
    fn request(&mut self, method: HttpMethod, path: &str, body: Option<&Value>) -> Result<(u16, Value), TransportError> {
        let url = format!("{}{}", self.base, path);
        let builder = match method {
            HttpMethod::Get => self.client.get(url),
            HttpMethod::Post => self.client.post(url).json(body.unwrap_or(&Value::Object(Default::default()))),
            HttpMethod::Delete => self.client.delete(url),
        };
        let response = builder.send().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Connection(e.to_string())
            }
        })?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| TransportError::Malformed(e.to_string()))?;
        if text.trim().is_empty() {
            return Ok((status, Value::Null));
        }
        let value = serde_json::from_str(&text).map_err(|e| TransportError::Malformed(e.to_string()))?;
        Ok((status, value))
    }

    fn sleep_ms(&mut self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }
}

/// Open a WebDriver session on `endpoint`.
pub fn connect(endpoint: &str, config: SessionConfig, capabilities: Value) -> Result<WebDriverSession<HttpTransport>, formnav_core::browser::BrowserError> {
    let transport = HttpTransport::new(endpoint, config.page_load_timeout_ms.max(config.command_timeout_ms))
        .map_err(|e| formnav_core::browser::BrowserError::SessionLost(e.to_string()))?;
    WebDriverSession::connect(transport, config, capabilities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Write};
    use std::net::TcpListener;

    #[test]
    fn unreachable_driver_is_a_connection_error() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let mut t = HttpTransport::new(&format!("http://{}", addr), 2_000).unwrap();
        assert!(matches!(t.request(HttpMethod::Get, "/status", None), Err(TransportError::Connection(_))));
    }

    #[test]
    fn parses_json_replies() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let body = r#"{"value":{"ready":true}}"#;
            let mut stream = stream;
            write!(stream, "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}", body.len(), body).unwrap();
        });
        let mut t = HttpTransport::new(&format!("http://{}/", addr), 2_000).unwrap();
        let (status, value) = t.request(HttpMethod::Get, "/status", None).unwrap();
        assert_eq!(status, 200);
        assert_eq!(value["value"]["ready"], true);
    }
}
