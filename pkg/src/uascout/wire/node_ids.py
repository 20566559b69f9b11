"""Well-known numeric node ids from the standard namespace (index 0)."""

ROOT_FOLDER = 84
OBJECTS_FOLDER = 85
TYPES_FOLDER = 86
VIEWS_FOLDER = 87

SERVER = 2253
SERVER_ARRAY = 2254
NAMESPACE_ARRAY = 2255
SERVER_STATUS = 2256
SERVER_STATUS_BUILD_INFO = 2260
BUILD_INFO_PRODUCT_NAME = 2261
BUILD_INFO_PRODUCT_URI = 2262
BUILD_INFO_MANUFACTURER_NAME = 2263
BUILD_INFO_SOFTWARE_VERSION = 2264
BUILD_INFO_BUILD_NUMBER = 2265
BUILD_INFO_BUILD_DATE = 2266

STANDARD_NAMESPACE_URI = "http://opcfoundation.org/UA/"
