"""uascout: network-based security assessment toolkit for OPC UA deployments."""

__version__ = "0.1.0"

# Client application identity; servers match it against certificate SANs.
APPLICATION_URI = "urn:uascout:client"
PRODUCT_URI = "urn:uascout"
APPLICATION_NAME = "uascout"
