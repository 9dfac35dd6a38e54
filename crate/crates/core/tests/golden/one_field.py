# Form test state-0 for state 0 of id=signup
from selenium import webdriver
from selenium.webdriver.common.by import By
from selenium.webdriver.support.ui import Select

driver = webdriver.Chrome()
invalid = None
try:
    driver.get("http://sim.test/forms/0001.html")
    field = driver.find_element(By.NAME, "email")
    field.clear()
    field.send_keys("user@example.com")
    form = driver.find_element(By.ID, "signup")
    invalid = form.find_elements(By.CSS_SELECTOR, ":invalid")
    form.submit()
    assert invalid == [], "fields failed validation at submit"
finally:
    driver.quit()
