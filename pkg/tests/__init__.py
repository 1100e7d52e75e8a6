# Tests package for the Virasoro Kac-module toolkit
