//! Opening browser sessions for the configured backend.

use std::path::Path;
use std::sync::Arc;

use formnav_core::browser::{Session, SimulatorSession, SiteBundle};

use crate::config::{BackendChoice, WebDriverConfig};
use crate::error::CliError;
use crate::io::load_site;

/// A session plus, for the simulator, the bundle it serves.
pub struct Backend {
    pub session: Box<dyn Session>,
    pub bundle: Option<Arc<SiteBundle>>,
}

impl Backend {
    pub fn simulator(bundle: SiteBundle) -> Backend {
        let bundle = Arc::new(bundle);
        Backend { session: Box::new(SimulatorSession::new(bundle.clone())), bundle: Some(bundle) }
    }

    pub fn open(choice: BackendChoice, site: Option<&Path>, webdriver: &WebDriverConfig) -> Result<Backend, CliError> {
        match choice {
            BackendChoice::Sim => {
                let site = site.ok_or_else(|| CliError::Usage("the sim backend needs --site".into()))?;
                Ok(Backend::simulator(load_site(site)?))
            }
            BackendChoice::Webdriver => {
                let session = crate::http::connect(&webdriver.endpoint, webdriver.session.clone(), webdriver.capabilities.clone())
                    .map_err(|e| CliError::Backend(format!("{}: {}", webdriver.endpoint, e)))?;
                Ok(Backend { session: Box::new(session), bundle: None })
            }
        }
    }

    /// Absolute URL for `url`; paths resolve against the simulator origin.
    pub fn resolve(&self, url: &str) -> String {
        match &self.bundle {
            Some(bundle) if !url.contains("://") => bundle.url(url),
            _ => url.to_string(),
        }
    }

    pub fn close(&mut self) {
        if let Err(e) = self.session.close() {
            log::warn!("closing session: {}", e);
        }
    }
}
