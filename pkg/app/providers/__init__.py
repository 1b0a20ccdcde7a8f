# Scenario and generator providers
